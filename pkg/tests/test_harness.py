import json
import math

import numpy as np
import pytest

from partmi.core import InputError, Labeling, contingency_from_labelings
from partmi.counting import log_omega_exact
from partmi.harness import (
    DEMOS,
    GroundTruthSpec,
    PerturbationSpec,
    exhaustive_rank_flip,
    expand_grid,
    find_rank_flip,
    load_sweep_config,
    parse_sweep_config,
    perturb,
    planted_labeling,
    power_law_sizes,
    records_to_csv,
    run_sweep,
    set_partitions,
    write_sweep,
)
from partmi.measures import MeasureSpec, h0, i0_factorial, score, six_measures

G = Labeling(np.repeat(np.arange(5), [12, 9, 7, 7, 5]))


# -- perturbations ----------------------------------------------------------


def test_extremes():
    assert perturb(G, PerturbationSpec("singletons")).q == G.n
    assert perturb(G, PerturbationSpec("one_group")).q == 1


def test_relabel_zero_is_identity():
    assert perturb(G, PerturbationSpec("relabel_noise", p=0.0)) == G


def test_perturb_reproducible():
    spec = PerturbationSpec("relabel_noise", p=0.4, seed=3)
    assert perturb(G, spec) == perturb(G, spec)
    assert perturb(G, spec) != perturb(G, PerturbationSpec("relabel_noise", p=0.4, seed=4))


def test_relabel_uses_existing_groups():
    for seed in range(5):
        c = perturb(G, PerturbationSpec("relabel_noise", p=1.0, seed=seed))
        assert c.q <= G.q and c.n == G.n


def test_oversplit_refines_truth():
    prev = G.q
    for k in (1, 2, 3, 5, 50):
        c = perturb(G, PerturbationSpec("oversplit", k=k, seed=1))
        # every candidate group sits inside one truth group
        t = contingency_from_labelings(c, G).counts
        assert ((t > 0).sum(axis=1) == 1).all()
        assert c.q >= prev
        prev = c.q
        assert c.q == sum(min(k, s) for s in G.sizes)
    assert perturb(G, PerturbationSpec("oversplit", k=1)) == G


def test_merge_coarsens_truth():
    prev = G.q
    for pairs in (0, 1, 2, 3):
        c = perturb(G, PerturbationSpec("merge", pairs=pairs, seed=2))
        t = contingency_from_labelings(c, G).counts
        assert ((t > 0).sum(axis=0) == 1).all()
        assert c.q == G.q - min(pairs, G.q // 2)
        assert c.q <= prev
        prev = c.q


@pytest.mark.parametrize("kw", [
    dict(kind="shuffle"), dict(kind="relabel_noise", p=1.5),
    dict(kind="oversplit", k=0), dict(kind="merge", pairs=-1),
])
def test_bad_perturbations(kw):
    with pytest.raises(InputError):
        PerturbationSpec(**kw)


# -- ground truths ----------------------------------------------------------


def test_power_law_sizes_sum_and_bounds():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = power_law_sizes(500, 1.5, 20, 100, rng)
        assert sum(s) == 500
        assert min(s) >= 20 or len(s) == 1


def test_truth_bounds_scale_with_n():
    assert GroundTruthSpec(1000).bounds() == (20, 100)
    assert GroundTruthSpec(5000).bounds() == (20, 500)
    assert GroundTruthSpec(100).bounds() == (10, 50)
    lo, hi = GroundTruthSpec(10).bounds()
    assert 1 <= lo <= hi <= 10


def test_planted_explicit_sizes():
    g = planted_labeling(GroundTruthSpec(6, sizes=(3, 2, 1)), np.random.default_rng(1))
    assert sorted(g.sizes.tolist()) == [1, 2, 3]
    with pytest.raises(InputError):
        GroundTruthSpec(6, sizes=(3, 2))


# -- sweeps -----------------------------------------------------------------


def test_sweep_singleton_fixture():
    truth = GroundTruthSpec(9, sizes=(4, 3, 2))
    specs = [MeasureSpec("plain", "none"), MeasureSpec("reduced", "none", "exact")]
    recs = run_sweep(truth, [PerturbationSpec("singletons")], specs, replicates=3, seed=1)
    assert len(recs) == 3
    h = math.log(math.factorial(9) / (24 * 6 * 2))
    for r in recs:
        assert r.scores["plain"] == pytest.approx(h, abs=1e-12)
        assert r.scores["reduced"] == pytest.approx(0.0, abs=1e-12)


def test_sweep_reproducible_and_order_free():
    truth = GroundTruthSpec(120)
    grid = expand_grid([{"kind": "relabel_noise", "p": [0.1, 0.5]}])
    a = run_sweep(truth, grid, six_measures(), replicates=3, seed=9)
    b = run_sweep(truth, grid[::-1], six_measures(), replicates=3, seed=9)
    assert records_to_csv(a, [m.name for m in six_measures()]) == \
        records_to_csv(run_sweep(truth, grid, six_measures(), 3, 9), [m.name for m in six_measures()])
    # truths depend only on the replicate, not on the grid
    assert [r.q_g for r in a if r.grid_index == 0] == [r.q_g for r in b if r.grid_index == 1]


def test_full_noise_behaviour():
    # p = 1 destroys all information: adjusted MI averages to zero, the plain
    # measure stays positive and the reduced one falls below zero
    truth = GroundTruthSpec(100, sizes=(25, 25, 25, 25))
    specs = [MeasureSpec("plain", "none"), MeasureSpec("adjusted", "none"),
             MeasureSpec("reduced", "none")]
    recs = run_sweep(truth, [PerturbationSpec("relabel_noise", p=1.0)], specs, 400, seed=2)
    for name in ("plain", "adjusted", "reduced"):
        v = np.array([r.scores[name] for r in recs])
        m, se = v.mean(), v.std(ddof=1) / math.sqrt(v.size)
        if name == "adjusted":
            assert abs(m) < 3 * se
        elif name == "plain":
            assert m > 3 * se
        else:
            assert m < -3 * se


def test_csv_and_manifest(tmp_path):
    raw = {
        "seed": 4, "replicates": 2, "measures": ["reduced_asym", "plain_sym_arith"],
        "truth": {"n": 60},
        "perturbation": [{"kind": "oversplit", "k": [1, 2]}, {"kind": "one_group"}],
    }
    cfg = parse_sweep_config(raw)
    recs = cfg.run()
    out = tmp_path / "s.csv"
    man = write_sweep(cfg, recs, out)
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[-2:] == ["reduced_asym", "plain_sym_arith"]
    assert len(lines) == 1 + 3 * 2
    assert "undefined" not in lines[1]
    meta = json.loads(man.read_text())
    assert meta["seed"] == 4 and meta["records"] == 6
    assert parse_sweep_config(raw, seed=11).seed == 11


def test_toml_config(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text(
        'seed = 3\nreplicates = 2\nmeasures = "all"\nomega = "ec"\n'
        '[truth]\nn = 50\n'
        '[[perturbation]]\nkind = "relabel_noise"\np = [0.0, 0.2]\n',
        encoding="utf-8")
    cfg = load_sweep_config(p)
    assert cfg.seed == 3 and len(cfg.grid) == 2 and len(cfg.measures) == 6
    recs = cfg.run()
    assert all(r.scores["reduced_asym"] == pytest.approx(1.0) for r in recs if r.grid_index == 0)


def test_bad_configs(tmp_path):
    with pytest.raises(InputError):
        parse_sweep_config({"perturbation": []})
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = = 1\n")
    with pytest.raises(InputError):
        load_sweep_config(bad)
    with pytest.raises(InputError):
        load_sweep_config(tmp_path / "nope.toml")


# -- rank flips -------------------------------------------------------------


def test_set_partitions_bell_numbers():
    assert [sum(1 for _ in set_partitions(n)) for n in range(1, 7)] == [1, 2, 5, 15, 52, 203]


def test_no_rank_flip_at_four():
    assert exhaustive_rank_flip(4) is None


def test_find_rank_flip():
    flip = find_rank_flip(8, seed=0, budget=100_000)
    assert flip is not None
    i0a = i0_factorial(contingency_from_labelings(flip.c_a, flip.g))
    i0b = i0_factorial(contingency_from_labelings(flip.c_b, flip.g))
    assert i0a > i0b
    sym = MeasureSpec("plain", "sym_arith")
    asym = MeasureSpec("plain", "asym")
    assert score(flip.c_a, flip.g, sym).score < score(flip.c_b, flip.g, sym).score
    assert score(flip.c_a, flip.g, asym).score > score(flip.c_b, flip.g, asym).score


def test_find_rank_flip_needs_room():
    with pytest.raises(InputError):
        find_rank_flip(3)


# -- demos ------------------------------------------------------------------


def test_demo_singleton_numbers():
    out = DEMOS["singleton"]()
    g = [1, 1, 1, 2, 2, 3, 3, 3, 3, 4]
    assert f"{h0(g):.6f}" in out
    assert f"{log_omega_exact([1] * 10, [3, 2, 4, 1]).log_omega:.6f}" in out
    assert "reduced I(c;g)           = 0.000000" in out or "= -0.000000" in out


@pytest.mark.parametrize("name", sorted(DEMOS))
def test_demos_run(name):
    assert DEMOS[name](0)
