"""Quick end-to-end check of the qpb Python extension.

Build and install first:
    cd crates/py && maturin build --release -o dist && pip install dist/qpb-*.whl
"""

import math

import qpb


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    probs = qpb.photon_pmf("coherent", alpha=1.5)
    assert close(sum(probs), 1.0, 1e-12)
    assert close(probs[0], math.exp(-2.25), 1e-12)
    mean, var, q = qpb.photon_moments("thermal", n_th=1.5)
    assert close(mean, 1.5, 1e-8) and close(var, 1.5 * 2.5, 1e-8)
    try:
        qpb.photon_pmf("coherent", alpha=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative amplitude accepted")

    vac = qpb.Su11.vacuum(1.0)
    n = vac.n_total
    _, delta = vac.optimize("parity")
    assert abs(delta * math.sqrt(n * (n + 2)) - 1.0) < 0.02
    su = qpb.Su11(16.0, 4.0, 1.0, 1.0)
    phi_star, delta = su.optimize("parity")
    snl, hl = su.limits()
    assert hl <= delta and 0.0 < phi_star < math.pi
    print(f"su11: delta_phi={delta:.4e} snl={snl:.4e} hl={hl:.4e}")

    est = qpb.camera_estimate(4.0, 1.0, frames=2000, rows=8, cols=8, seed=3)
    assert 0.5 < est.n_s < 1.5
    print(f"camera: n_s={est.n_s:.4f} r={est.r:.4f}")

    nb = qpb.NaiveBayes(0.4)
    assert nb.classify([0] * 10)[0] == "thermal"
    counts = qpb.generate_counts("thermal", 0.4, 500, seed=5)
    assert nb.classify(counts)[0] == "thermal"
    curve = qpb.accuracy_curve(0.4, [1, 40], trials=500, seed=2)
    assert curve.accuracy[1] > curve.accuracy[0]
    print(f"discriminate: {list(zip(curve.sample_sizes, curve.accuracy))}")

    rho = qpb.QubitDensity.reconstruct([0.5, 0.5, 1.0, 0.0, 0.5, 0.5])
    target = qpb.QubitDensity.pure(1 + 0j, 1 + 0j)
    assert close(rho.fidelity(target), 1.0, 1e-9)

    report = qpb.run_pipeline(cn2_paper_units=60.0, grid_size=128, max_iter=40, seed=1)
    assert report.mse_ratio() < 1.0
    assert report.fidelity_corrected >= report.fidelity_distorted
    print(
        f"pipeline: F_distorted={report.fidelity_distorted:.4f} "
        f"F_corrected={report.fidelity_corrected:.4f} mse_ratio={report.mse_ratio():.4f}"
    )
    print("smoke test passed")


if __name__ == "__main__":
    main()
