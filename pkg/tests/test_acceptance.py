"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import json
import math
import time

import numpy as np

from flowq.amplitude_estimation import GoodSubspacePredicate, build_grover, qae, qae_distribution, qae_median
from flowq.cli import main
from flowq.copies import (
    MeanFieldSystem,
    QuadraticMap,
    apply_quadratic_map,
    build_history_system,
    copy_budget,
    euler_reference,
    meanfield_evolve,
    solve_history,
)
from flowq.encodings import basis_to_amplitude, block_encode
from flowq.integrator import ODESystem, QAEConfig, TimeMesh, exact_mean, solve
from flowq.ising import AnnealSchedule, IsingProblem, all_spins, simulated_annealing, solve_exhaustive
from flowq.oracles import closed_form, taylor_quadrature_linear
from flowq.qade import BasisSet, SpinEncoding, assemble_loss, quadratic_test_problem, spin_encode, zoom_iterate
from flowq.qlbm import (
    D1Q2Params,
    LatticeField,
    build_collision,
    classical_lbm_step,
    collide,
    encode_distribution,
    gaussian_hill,
    prepare_collision_input,
    qlbm_run,
    quantum_lbm_step,
)
from flowq.qrk import RKStageProblem, build_rk_residual, minimize_rk_residual, rk_windowed_solve, tableau
from flowq.statevector import ry


def verdict(number: int, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'} | {detail}")
    return ok


def one_qubit_grover(a):
    return build_grover(ry(2 * math.asin(math.sqrt(a))), GoodSubspacePredicate([False, True]))


def test_criterion_01_qae_exact_phase_recovery():
    start = time.perf_counter()
    worst_err, bad_support = 0.0, 0
    for n in (3, 4, 5):
        N = 2**n
        for y0 in range(N):
            a = math.sin(math.pi * y0 / N) ** 2
            est = qae(one_qubit_grover(a), n, "exact")
            worst_err = max(worst_err, abs(est.a_hat - a))
            support = set(np.flatnonzero(est.distribution > 1e-12).tolist())
            bad_support += not support <= {y0, (N - y0) % N}
    elapsed = time.perf_counter() - start
    ok = worst_err <= 1e-12 and bad_support == 0 and elapsed < 10
    assert verdict(1, ok, f"max |a_hat - a| = {worst_err:.2e}, bad supports = {bad_support}, {elapsed:.2f} s")


def test_criterion_02_qae_error_law():
    start = time.perf_counter()
    grid = np.linspace(0.0, 1.0, 101)
    medians, worst_ratio = [], 0.0
    for n in range(4, 9):
        errs = np.array([abs(qae(one_qubit_grover(a), n, "exact").a_hat - a) for a in grid])
        worst_ratio = max(worst_ratio, errs.max() / (2 * math.pi / 2**n))
        medians.append(float(np.median(errs)))
    halvings = [medians[i + 1] / medians[i] for i in range(len(medians) - 1)]
    elapsed = time.perf_counter() - start
    ok = worst_ratio <= 1 and all(0.4 <= r <= 0.6 for r in halvings) and elapsed < 60
    assert verdict(2, ok, f"max err/(2pi/N) = {worst_ratio:.3f}, median ratios = "
                          f"{[round(r, 3) for r in halvings]}, {elapsed:.2f} s")


def test_criterion_03_median_amplification():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    n, M, runs = 4, 9, 500
    bound = 2 * math.pi / 2**n
    failures = single_failures = 0
    for run in range(runs):
        a = float(rng.uniform())
        g = one_qubit_grover(a)
        est = qae_median(g, n, M, seed=run * M)
        failures += abs(est.a_hat - a) > bound
        single_failures += abs(est.samples[0] - a) > bound
    rate = failures / runs
    elapsed = time.perf_counter() - start
    ok = rate <= math.exp(-M / 8) and elapsed < 120
    assert verdict(3, ok, f"median-of-{M} failure rate = {rate:.3f} (single run {single_failures / runs:.3f}), "
                          f"bound {math.exp(-M / 8):.3f}, {elapsed:.2f} s")


def test_criterion_04_quantum_integrator():
    start = time.perf_counter()
    sys = ODESystem.linear([[-1.0]])
    mesh = TimeMesh(1.0, 4, 4)
    exact = closed_form("exp-decay").evaluate(1.0)
    errors = {}
    for n in range(4, 9):
        traj, _ = solve(sys, [1.0], mesh, 2, QAEConfig(n_phase=n))
        errors[n] = abs(traj[-1, 0] - exact)
    stub, _ = solve(sys, [1.0], mesh, 2, mean_estimator=exact_mean, oracle=False)
    oracle = taylor_quadrature_linear([[-1.0]], None, [1.0], 1.0, 4, 4, 2)
    stub_delta = float(np.max(np.abs(stub - oracle)))
    monotone = all(errors[n + 1] <= 1.1 * errors[n] for n in range(4, 8))
    elapsed = time.perf_counter() - start
    ok = errors[7] <= 5e-2 and stub_delta <= 1e-12 and monotone and elapsed < 60
    assert verdict(4, ok, f"|y(1) - 1/e| at n_phase 7 = {errors[7]:.4e}, stub vs oracle = {stub_delta:.1e}, "
                          f"errors 4..8 = {[f'{errors[n]:.4e}' for n in range(4, 9)]}, {elapsed:.2f} s")


def test_criterion_05_qlbm_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_step = worst_prob = worst_mass = 0.0
    for trial in range(100):
        M = (8, 16)[trial % 2]
        p = D1Q2Params(M, u=float(rng.uniform(-1, 1)))
        field = LatticeField(rng.uniform(0.05, 1.0, size=M))
        out, info = quantum_lbm_step(field, p)
        worst_step = max(worst_step, float(np.max(np.abs(out.phi - classical_lbm_step(field, p).phi))))
        worst_mass = max(worst_mass, abs(out.mass - field.mass))
        col = build_collision(p)
        d = prepare_collision_input(field)
        psi = d.f / np.linalg.norm(d.f)
        _, prob = collide(encode_distribution(d)[0], col)
        worst_prob = max(worst_prob, abs(prob - float(np.sum((col.A * psi) ** 2))))
    p0 = D1Q2Params(8, u=0.0)
    d0 = prepare_collision_input(LatticeField(rng.uniform(0.1, 1, size=8)))
    _, prob_rest = collide(encode_distribution(d0)[0], build_collision(p0))
    run = qlbm_run(gaussian_hill(16), D1Q2Params(16, u=0.2), 20)
    traj_mass = max(abs(r.mass_out - r.mass_in) for r in run.reports)
    elapsed = time.perf_counter() - start
    ok = (worst_step <= 1e-8 and run.max_deviation() <= 1e-6 and worst_prob <= 1e-12
          and abs(prob_rest - 0.25) <= 1e-12 and max(worst_mass, traj_mass) <= 1e-10 and elapsed < 60)
    assert verdict(5, ok, f"step dev = {worst_step:.1e}, 20-step dev = {run.max_deviation():.1e}, "
                          f"prob dev = {worst_prob:.1e}, p(u=0) = {prob_rest:.15f}, "
                          f"mass drift = {max(worst_mass, traj_mass):.1e}, {elapsed:.2f} s")


def test_criterion_06_qade():
    start = time.perf_counter()
    basis = BasisSet("monomial", 2)
    problem = quadratic_test_problem()
    s0, n_spins, epochs = 2.0, 3, 6
    enc0 = SpinEncoding([0.0, 0.0, 0.0], s0, n_spins)
    lo, hi = enc0.bounds()
    assert np.all(lo <= [0, 0, 1]) and np.all([0, 0, 1] <= hi)
    res = zoom_iterate(problem, basis, enc0, epochs, 0.5, "exhaustive")
    weight_err = float(np.max(np.abs(res.weights - [0.0, 0.0, 1.0])))
    bound = s0 * 2.0**-n_spins * 2.0**-epochs * 2

    loss = assemble_loss(problem, basis)
    rng = np.random.default_rng(11)
    worst_identity = 0.0
    for _ in range(5):
        enc = SpinEncoding(rng.normal(size=3), rng.uniform(0.2, 2, size=3), 4)  # 12 spins
        ising = spin_encode(loss, enc)
        spins = all_spins(enc.total_spins)
        decoded = enc.decode(spins)
        direct = np.einsum("ri,ij,rj->r", decoded, loss.J, decoded) + decoded @ loss.h + loss.constant
        worst_identity = max(worst_identity, float(np.max(np.abs(ising.energy(spins) - direct))))

    matches = 0
    for seed in range(100):
        r = np.random.default_rng(seed)
        p = IsingProblem.from_quadratic(r.normal(size=(16, 16)), r.normal(size=16))
        best = solve_exhaustive(p).energy
        sa = simulated_annealing(p, AnnealSchedule(), seed).energy
        matches += abs(sa - best) <= 1e-9 * max(1.0, abs(best))
    elapsed = time.perf_counter() - start
    ok = weight_err <= bound and worst_identity <= 1e-10 and matches >= 95 and elapsed < 120
    assert verdict(6, ok, f"weight error = {weight_err:.3e} (bound {bound:.3e}), identity dev = "
                          f"{worst_identity:.1e}, SA matches = {matches}/100, {elapsed:.2f} s")


def test_criterion_07_qrk():
    start = time.perf_counter()
    p = RKStageProblem.linear([[-1.0]], [1.0], 0.1, tableau("rk4"))
    u_rk4 = minimize_rk_residual(build_rk_residual(p))[0][0]
    pm = RKStageProblem.linear([[-1.0]], [1.0], 0.1, tableau("implicit-midpoint"))
    u_mid, _ = rk_windowed_solve(pm, bits=6, epochs=10)
    target = closed_form("implicit-midpoint").evaluate(0.1)
    elapsed = time.perf_counter() - start
    ok = abs(u_rk4 - 0.9048375) <= 1e-10 and abs(u_mid[0] - target) <= 1e-3 and elapsed < 60
    assert verdict(7, ok, f"RK4 minimizer error = {abs(u_rk4 - 0.9048375):.1e}, windowed midpoint error = "
                          f"{abs(u_mid[0] - target):.2e}, {elapsed:.2f} s")


def test_criterion_08_interacting_copies():
    start = time.perf_counter()
    qmap = QuadraticMap.complex_square()
    fid_ok = prob_ok = True
    ratios = []
    for eps in (0.2, 0.1, 0.05):
        res = apply_quadratic_map(qmap, [0.6, 0.8], eps)
        fid_ok &= res.fidelity >= 1 - eps**2
        ratios.append(res.success_probability / (eps**2 / 2))
        prob_ok &= abs(ratios[-1] - 1) <= 0.2
    budget_ok = all(copy_budget(eps, m) == round((16 / eps**2) ** m) for eps in (0.2, 0.1, 0.05, 0.5)
                    for m in (1, 2, 3))

    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        sys = MeanFieldSystem(2, (g - g.conj().T) / 2, 4, m=1)
        x0 = rng.normal(size=2) + 1j * rng.normal(size=2)
        x0 /= np.linalg.norm(x0)
        dt = 0.05 / np.linalg.norm(sys.f(x0), 2)
        res = meanfield_evolve(sys, x0, dt, 5)
        worst = max(worst, float(np.max(res.step_errors)) / (res.E_norm * dt) ** 2)

    f = rng.normal(size=(2, 2))
    b = np.vstack([[1.0, 0.0], rng.normal(size=(5, 2)) * 0.1])
    hist = solve_history(build_history_system(f, b, 5, 0.1, 1))
    hist_dev = float(np.max(np.abs(hist.extracted - euler_reference(f, b, 5, 0.1))))
    elapsed = time.perf_counter() - start
    ok = fid_ok and prob_ok and budget_ok and worst <= 10 and hist_dev <= 1e-12 and elapsed < 120
    assert verdict(8, ok, f"fidelity ok = {fid_ok}, p/(eps^2/2) = {[round(r, 4) for r in ratios]}, "
                          f"budget ok = {budget_ok}, max step error/(E dt)^2 = {worst:.3f}, "
                          f"history dev = {hist_dev:.1e}, {elapsed:.2f} s")


def test_criterion_09_encoding_conversions():
    start = time.perf_counter()
    rng = np.random.default_rng(9)
    worst_prob = worst_amp = worst_block = 0.0
    for _ in range(100):
        N = int(rng.integers(2, 17))
        d = rng.uniform(size=N)
        state, prob = basis_to_amplitude(d)
        worst_prob = max(worst_prob, abs(prob - float(d @ d) / N))
        worst_amp = max(worst_amp, float(np.max(np.abs(state.amplitudes[:N] - d / np.linalg.norm(d)))))
    for _ in range(50):
        n = int(rng.integers(1, 9))
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        alpha = float(np.linalg.norm(A, 2)) * rng.uniform(1.0, 2.0)
        worst_block = max(worst_block, float(np.max(np.abs(block_encode(A, alpha).extract() - A))))
    elapsed = time.perf_counter() - start
    ok = worst_prob <= 1e-12 and worst_amp <= 1e-10 and worst_block <= 1e-10 and elapsed < 30
    assert verdict(9, ok, f"prob dev = {worst_prob:.1e}, amplitude dev = {worst_amp:.1e}, "
                          f"block dev = {worst_block:.1e}, {elapsed:.2f} s")


REPRO_CONFIGS = [
    {"algorithm": "encode", "params": {"kind": "block", "matrix": [[0.5, 0.2], [0.1, -0.3]]}},
    {"algorithm": "qae", "params": {"a": 0.3, "n_phase": 6, "mode": "sampled", "M": 9}},
    {"algorithm": "integrate", "params": {"system": {"type": "pde", "points": 8, "diffusivity": 0.05},
                                          "T": 0.2, "n_primary": 4, "N_secondary": 4, "n_phase": 6,
                                          "mode": "sampled", "M": 3}},
    {"algorithm": "copies", "params": {"construction": "meanfield", "n": 4, "steps": 3}},
    {"algorithm": "qade", "params": {"epochs": 3, "method": "sa"}},
    {"algorithm": "qrk", "params": {"matrix": [[-1.0]], "u": [1.0], "dt": 0.1, "solver": "windowed",
                                    "method": "sa", "epochs": 3}},
    {"algorithm": "qlbm", "params": {"M": 16, "u": 0.2, "steps": 5}},
]


def test_criterion_10_reproducibility(tmp_path):
    identical = 0
    for i, body in enumerate(REPRO_CONFIGS):
        cfg = tmp_path / f"c{i}.json"
        cfg.write_text(json.dumps({"schema_version": "1", "seed": 17, **body}))
        outputs = []
        for run in range(2):
            out = tmp_path / f"c{i}_{run}"
            code = main([body["algorithm"], "--config", str(cfg), "--out", str(out), "--seed", "31"])
            assert code == 0
            outputs.append(((out / "report.json").read_bytes(), (out / "data.csv").read_bytes()))
        identical += outputs[0] == outputs[1]
    ok = identical == len(REPRO_CONFIGS)
    assert verdict(10, ok, f"{identical}/{len(REPRO_CONFIGS)} configs byte-identical across two runs")
