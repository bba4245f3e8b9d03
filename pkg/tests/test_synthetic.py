import pytest

from mcsched.synthetic import cybershake, epigenomics, generate, is_bundled
from mcsched.workflow import augment, max_parallel_set, top_level


@pytest.mark.parametrize("name", ["epigenomics-24", "epigenomics-30", "epigenomics-100", "cybershake-24", "cybershake-30", "cybershake-100"])
def test_sizes(name):
    n = int(name.split("-")[1])
    w = generate(name)
    assert len(w.tasks) == n
    assert w.name == name
    assert all(t.work > 0 for t in w.tasks)
    augment(w)  # acyclic and well-formed


def test_epigenomics_shape():
    w = augment(epigenomics(24))
    lv = top_level(w)
    assert lv["fastqSplit"] == 1 and lv["pileup"] == max(lv.values()) - 1
    assert len(max_parallel_set(w)) == 5
    assert len(w.succ["fastqSplit"]) == 5


def test_epigenomics_remainder_becomes_splits():
    w = epigenomics(30)
    splits = [t.id for t in w.tasks if t.id.startswith("fastqSplit")]
    assert len(splits) == 3
    with pytest.raises(ValueError):
        epigenomics(7)


def test_cybershake_shape():
    w = augment(cybershake(30))
    # 13 peak tasks share their level with ZipSeis
    assert len(max_parallel_set(w)) == 14
    assert len(w.succ["ExtractSGT_0"]) == 7
    with pytest.raises(ValueError):
        cybershake(31)


def test_seeded_jitter():
    assert generate("cybershake-30", 1) == generate("cybershake-30", 1)
    assert generate("cybershake-30", 1) != generate("cybershake-30", 2)


def test_names():
    assert is_bundled("epigenomics-24") and not is_bundled("montage-25") and not is_bundled("x/epigenomics-24.json")
    with pytest.raises(ValueError):
        generate("ligo-30")
