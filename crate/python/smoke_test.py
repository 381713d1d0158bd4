"""Quick end-to-end check of the Python bindings."""

import json
import math
import os
import tempfile

import gftree


def main():
    spec = gftree.ModelSpec.reference()
    assert json.loads(spec.to_json())["division_rate"]["power_law"]["exponent"] == 2.0
    assert spec.division_rate(2.0) == 4.0

    tree = gftree.simulate_full_tree(spec, 2, 7)
    assert len(tree) == 7
    assert len(gftree.simulate_sparse_lineage(spec, 5, 7)) == 5

    big = gftree.simulate_full_tree(spec, 10, 1)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "tree.csv")
        big.write_csv(path)
        assert gftree.Genealogy.read_csv(path).records() == big.records()

    obs = big.observations()
    est = gftree.estimate_b(obs)
    assert abs(est.dx - 1 / math.sqrt(len(obs))) < 1e-12
    mid = [i for i, y in enumerate(est.y) if 1.0 <= y <= 2.0]
    worst = max(abs(est.b_hat[i] - est.y[i] ** 2) / est.y[i] ** 2 for i in mid)
    print(f"n = {len(obs)}, h = {est.h:.4f}, worst relative error on [1, 2] = {worst:.3f}")
    assert worst < 0.5

    same = gftree.ObservationSet(*obs.columns())
    assert gftree.estimate_b(same).b_hat == est.b_hat

    config = json.dumps({"threshold": {"rule": "inv_sqrt"}})
    assert gftree.estimate_b(obs, config, pooled_tau=True).varpi == 1 / math.sqrt(len(obs))

    sol = gftree.invariant_fixed_point(1.0, 2.0, 1.0)
    assert sol["residual"] < 1e-10
    b = gftree.closed_loop_b(1.0, 2.0, 1.0, 1.0, 0.5, 5)
    assert all(abs(v - y * y) < 0.01 * y * y for v, y in zip(b, [1.0, 1.5, 2.0, 2.5, 3.0]))

    assert gftree.pde_relation_error(1.0, 2.0, 1.0) < 0.02

    study = gftree.convergence_study(spec, [6, 7], 10, "sparse", 3)
    assert [row["log2_n"] for row in study["rows"]] == [6, 7]

    report = gftree.many_to_one_check(spec, 0.5, 2000, seed=1)
    assert all(row["pass"] for row in report["rows"])

    try:
        gftree.simulate_full_tree(gftree.ModelSpec.reference(), 2, -1)
    except OverflowError:
        pass
    try:
        gftree.ModelSpec.constant_growth(1.0, -2.0, 1.0)
        raise AssertionError("negative exponent accepted")
    except ValueError:
        pass
    print("smoke test passed")


if __name__ == "__main__":
    main()
