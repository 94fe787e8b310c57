#include <catch2/catch_amalgamated.hpp>

#include <adiflow/hermitian.hpp>
#include <adiflow/rank_one.hpp>

#include "test_support.hpp"

using namespace adiflow;
using namespace testsupport;

TEST_CASE("eigendecompose: diagonal matrix is returned as-is") {
    Eigen::VectorXd d(4);
    d << 5, 10, 12, 17;
    SpectralDecomposition sd = eigendecompose(d.cast<cxd>().asDiagonal());
    REQUIRE((sd.eigenvalues - d).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((sd.eigenvectors - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eigendecompose: 1x1") {
    Eigen::MatrixXcd h(1, 1);
    h(0, 0) = -3.25;
    SpectralDecomposition sd = eigendecompose(h);
    REQUIRE(sd.eigenvalues[0] == Catch::Approx(-3.25));
}

TEST_CASE("eigendecompose: reconstructs a unitary conjugation of a known diagonal") {
    auto gen = rng(11);
    Eigen::VectorXd d = random_spectrum(gen, 8);
    Eigen::MatrixXcd u = random_unitary(gen, 8);
    Eigen::MatrixXcd h = u * d.cast<cxd>().asDiagonal() * u.adjoint();
    h = 0.5 * (h + h.adjoint()).eval();
    SpectralDecomposition sd = eigendecompose(h);
    Eigen::MatrixXcd rebuilt =
        sd.eigenvectors * sd.eigenvalues.cast<cxd>().asDiagonal() * sd.eigenvectors.adjoint();
    REQUIRE((rebuilt - h).norm() <= 1e-9 * h.norm());
    REQUIRE((sd.eigenvalues - d).cwiseAbs().maxCoeff() < 1e-10);
    // columns orthonormal
    Eigen::MatrixXcd g = sd.eigenvectors.adjoint() * sd.eigenvectors;
    REQUIRE((g - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("eigendecompose: rejects non-Hermitian input") {
    Eigen::MatrixXcd h(2, 2);
    h << cxd(0, 0), cxd(1, 0), cxd(0, 0), cxd(0, 0);
    REQUIRE_THROWS_AS(eigendecompose(h), validation_error);
}

TEST_CASE("eigendecompose: phase convention is deterministic") {
    auto gen = rng(12);
    Eigen::MatrixXcd h = random_hermitian(gen, 6);
    SpectralDecomposition sd = eigendecompose(h);
    for (int k = 0; k < 6; ++k) {
        Eigen::Index imax = 0;
        sd.eigenvectors.col(k).cwiseAbs().maxCoeff(&imax);
        cxd top = sd.eigenvectors(imax, k);
        REQUIRE(top.imag() == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(top.real() > 0.0);
    }
}

TEST_CASE("RankOneActivation validation") {
    Eigen::VectorXd d(3);
    d << 0, 1, 1;  // degenerate
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(3, cxd(1.0 / std::sqrt(3.0), 0));
    REQUIRE_THROWS_AS(RankOneActivation(d, v), validation_error);
    Eigen::VectorXd dj = jitter_spectrum(d);
    REQUIRE_NOTHROW(RankOneActivation(dj, v));
    Eigen::VectorXd d2(3);
    d2 << 0, 1, 2;
    REQUIRE_THROWS_AS(RankOneActivation(d2, 2.0 * v), validation_error);
}

TEST_CASE("secular_mu: uniform weights worked example") {
    Eigen::VectorXd d(4);
    d << 5, 10, 12, 17;
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(4, cxd(0.5, 0));
    RankOneActivation act(d, v);
    const double mu = secular_mu(7.0, act);
    // 1 / ((1/4)(1/2 - 1/3 - 1/5 - 1/10)) = -30
    REQUIRE(mu == Catch::Approx(-30.0).epsilon(1e-13));
    // and 7 is then an exact eigenvalue of D + mu v v^dag
    Eigen::VectorXd w = oracle_eigenvalues(act, mu);
    REQUIRE((w.array() - 7.0).abs().minCoeff() < 1e-10);
}

TEST_CASE("secular_mu: s just above d_k gives mu -> 0+") {
    auto gen = rng(21);
    RankOneActivation act = random_activation(gen, 5);
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const double mu = secular_mu(act.d[2] + delta, act);
        REQUIRE(mu > 0.0);
        REQUIRE(mu < prev);
        prev = mu;
    }
    REQUIRE(prev < 1e-6);
}

TEST_CASE("secular_mu: v = e_i reduces to mu = s - d_i") {
    Eigen::VectorXd d(3);
    d << 1, 2, 4;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(3);
    v[1] = 1.0;
    RankOneActivation act(d, v);
    REQUIRE(secular_mu(3.3, act) == Catch::Approx(3.3 - 2.0));
}

TEST_CASE("secular_mu: pole rejection") {
    auto gen = rng(22);
    RankOneActivation act = random_activation(gen, 4);
    REQUIRE_THROWS_AS(secular_mu(act.d[1], act), pole_error);
    REQUIRE_THROWS_AS(secular_mu(act.d[1] + 1e-16, act), pole_error);
}

TEST_CASE("eigenvalues_at_mu: mu = 0 returns the base spectrum exactly") {
    auto gen = rng(31);
    RankOneActivation act = random_activation(gen, 7);
    REQUIRE(eigenvalues_at_mu(act, 0.0) == act.d);
}

TEST_CASE("eigenvalues_at_mu: matches the dense oracle on random activations") {
    auto gen = rng(32);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(gen() % 15);
        RankOneActivation act = random_activation(gen, n);
        std::uniform_real_distribution<double> mu_draw(-10.0, 10.0);
        const double mu = mu_draw(gen) * act.spread();
        Eigen::VectorXd s = eigenvalues_at_mu(act, mu);
        Eigen::VectorXd w = oracle_eigenvalues(act, mu);
        const double scale = std::max(1.0, act.d.cwiseAbs().maxCoeff() + std::abs(mu));
        REQUIRE((s - w).cwiseAbs().maxCoeff() < 1e-10 * scale);
    }
}

TEST_CASE("eigenvalues_at_mu: fixed 16-dim activation at mu = 3.7") {
    auto gen = rng(33);
    RankOneActivation act = random_activation(gen, 16);
    Eigen::VectorXd s = eigenvalues_at_mu(act, 3.7);
    Eigen::VectorXd w = oracle_eigenvalues(act, 3.7);
    REQUIRE((s - w).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, w.cwiseAbs().maxCoeff()));
}

TEST_CASE("eigenvalues_at_mu: v = e_i shifts only level i") {
    Eigen::VectorXd d(4);
    d << 0, 1, 2, 3;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
    v[1] = 1.0;
    RankOneActivation act(d, v);
    Eigen::VectorXd s = eigenvalues_at_mu(act, 0.6);
    Eigen::VectorXd expected(4);
    expected << 0, 1.6, 2, 3;
    REQUIRE((s - expected).cwiseAbs().maxCoeff() < 1e-14);
    // the moving level crosses: output stays ascending
    s = eigenvalues_at_mu(act, 1.7);
    expected << 0, 2, 2.7, 3;
    REQUIRE((s - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("eigenvalues_at_mu: interlacing and monotonicity on a grid") {
    auto gen = rng(34);
    RankOneActivation act = random_activation(gen, 9);
    Eigen::VectorXd prev = act.d;
    for (int j = 1; j <= 60; ++j) {
        const double mu = 0.25 * j;
        Eigen::VectorXd s = eigenvalues_at_mu(act, mu);
        REQUIRE(interlacing_check(act.d, s, MuSign::positive));
        for (int k = 0; k < 9; ++k)
            REQUIRE(s[k] >= prev[k] - 1e-12);
        prev = s;
    }
    // mirrored for negative coupling
    for (int j = 1; j <= 20; ++j) {
        Eigen::VectorXd s = eigenvalues_at_mu(act, -0.3 * j);
        REQUIRE(interlacing_check(act.d, s, MuSign::negative));
    }
}

TEST_CASE("eigenvalues_at_mu: eigenvalue velocities sum to one") {
    auto gen = rng(35);
    RankOneActivation act = random_activation(gen, 6);
    const double h = 1e-5;
    for (double mu : {0.3, 1.7, 4.0}) {
        Eigen::VectorXd up = eigenvalues_at_mu(act, mu + h);
        Eigen::VectorXd dn = eigenvalues_at_mu(act, mu - h);
        const double total = (up - dn).sum() / (2.0 * h);
        REQUIRE(total == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("eigenvector_at: two-level example against the oracle") {
    Eigen::VectorXd d(2);
    d << 0, 1;
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(2, cxd(1.0 / std::sqrt(2.0), 0));
    RankOneActivation act(d, v);
    Eigen::VectorXd s = eigenvalues_at_mu(act, 1.0);
    Eigen::MatrixXcd oracle = oracle_eigenvectors(act, 1.0);
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXcd u = eigenvector_at(s[k], act);
        REQUIRE(u.norm() == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(overlap(u, oracle.col(k)) >= 1.0 - 1e-10);
    }
}

TEST_CASE("eigenvector_at: eigen-residual stays below 1e-9") {
    auto gen = rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(gen() % 20);
        RankOneActivation act = random_activation(gen, n);
        std::uniform_real_distribution<double> mu_draw(-8.0, 8.0);
        const double mu = mu_draw(gen);
        Eigen::VectorXd s = eigenvalues_at_mu(act, mu);
        Eigen::MatrixXcd h = act.matrix(mu);
        for (int k = 0; k < n; ++k) {
            Eigen::VectorXcd u = eigenvector_at(s[k], act);
            REQUIRE((h * u - s[k] * u).norm() <= 1e-9);
        }
    }
}

TEST_CASE("eigenvector_at: near-pole limit picks out the basis vector") {
    // With an edge-case v, an eigenvalue just below d_k has its eigenvector
    // dominated by the 1/(s - d_k) component.
    Eigen::VectorXd d(4);
    d << 0, 1, 2, 3;
    const double eps = 1e-3;
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(4, cxd(eps, 0));
    v[0] = 1.0 - 3.0 * eps * eps;
    v.normalize();
    RankOneActivation act(d, v);
    const double mu = 40.0;  // far past every critical value
    Eigen::VectorXd s = eigenvalues_at_mu(act, mu);
    for (int k = 0; k < 3; ++k) {
        Eigen::VectorXcd u = eigenvector_at(s[k], act);
        REQUIRE(std::abs(u[k + 1]) > 0.999);
    }
}

TEST_CASE("eigenvector_at: pole rejection") {
    auto gen = rng(42);
    RankOneActivation act = random_activation(gen, 4);
    REQUIRE_THROWS_AS(eigenvector_at(act.d[2], act), pole_error);
}

TEST_CASE("lagrange_series: order 1 reproduces first-order perturbation theory") {
    auto gen = rng(51);
    RankOneActivation act = random_activation(gen, 5);
    const int r = 2;
    const double vr2 = std::norm(act.v[r]);
    double prev_err = -1.0;
    for (double mu : {4e-2, 2e-2, 1e-2, 5e-3}) {
        const double first = lagrange_series(act, mu, r, 1);
        REQUIRE(first == Catch::Approx(act.d[r] + mu * vr2).epsilon(1e-12));
        const double exact = eigenvalues_at_mu(act, mu)[r];
        const double err = std::abs(first - exact);
        if (prev_err > 0.0)  // halving mu shrinks the O(mu^2) residual ~4x
            REQUIRE(prev_err / err == Catch::Approx(4.0).margin(1.0));
        prev_err = err;
    }
}

TEST_CASE("lagrange_series: mu = 0 returns d_r exactly") {
    auto gen = rng(52);
    RankOneActivation act = random_activation(gen, 4);
    for (int r = 0; r < 4; ++r)
        REQUIRE(lagrange_series(act, 0.0, r, 5) == act.d[r]);
}

TEST_CASE("lagrange_series: order 4 at small mu agrees with the root-finder") {
    auto gen = rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        RankOneActivation act = random_activation(gen, 4);
        double min_gap = act.d[1] - act.d[0];
        for (int k = 1; k < 3; ++k)
            min_gap = std::min(min_gap, act.d[k + 1] - act.d[k]);
        const double mu = 0.01;
        if (min_gap < 1.0)
            continue;
        for (int r = 0; r < 4; ++r) {
            const double est = lagrange_series(act, mu, r, 4);
            const double exact = eigenvalues_at_mu(act, mu)[r];
            REQUIRE(std::abs(est - exact) < 1e-8);
        }
    }
}

TEST_CASE("lagrange_series: truncation error shrinks with order inside the region") {
    auto gen = rng(54);
    RankOneActivation act = random_activation(gen, 4, 5.0);
    double min_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k)
        min_gap = std::min(min_gap, act.d[k + 1] - act.d[k]);
    const double mu = 0.05 * min_gap;
    const double exact = eigenvalues_at_mu(act, mu)[1];
    std::vector<double> partials = lagrange_series_partials(act, mu, 1, 6);
    double prev = std::abs(partials[0] - exact);
    for (std::size_t q = 1; q < partials.size(); ++q) {
        const double err = std::abs(partials[q] - exact);
        REQUIRE(err <= prev * 1.05 + 1e-15);
        prev = err;
    }
}

TEST_CASE("lagrange_series: refuses orders past the cap") {
    auto gen = rng(55);
    RankOneActivation act = random_activation(gen, 4);
    REQUIRE_THROWS_AS(lagrange_series(act, 0.01, 0, 9), validation_error);
    REQUIRE_NOTHROW(lagrange_series(act, 0.01, 0, 9, 12));
    REQUIRE_THROWS_AS(lagrange_series(act, 0.01, 0, 0), validation_error);
}

TEST_CASE("interlacing_check: violations and length mismatch") {
    Eigen::VectorXd d(2), s(2);
    d << 0, 1;
    s << 2, 3;
    REQUIRE_FALSE(interlacing_check(d, s, MuSign::positive));
    s << 0.5, 1.5;
    REQUIRE(interlacing_check(d, s, MuSign::positive));
    Eigen::VectorXd bad(3);
    bad << 0, 1, 2;
    REQUIRE_THROWS_AS(interlacing_check(d, bad, MuSign::positive), validation_error);
}

TEST_CASE("secular round trip: mu(s) then eigenvalues_at_mu recovers s") {
    auto gen = rng(61);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(gen() % 10);
        RankOneActivation act = random_activation(gen, n);
        std::uniform_real_distribution<double> pick(0.05, 0.95);
        const int k = static_cast<int>(gen() % (n - 1));
        const double s = act.d[k] + pick(gen) * (act.d[k + 1] - act.d[k]);
        const double mu = secular_mu(s, act);
        Eigen::VectorXd roots = eigenvalues_at_mu(act, mu);
        const double scale = std::max(1.0, act.d.cwiseAbs().maxCoeff() + std::abs(mu));
        REQUIRE((roots.array() - s).abs().minCoeff() <= 1e-10 * scale);
    }
}

TEST_CASE("jitter_spectrum: splits ties by 1e-9 of the spread") {
    Eigen::VectorXd d(3);
    d << 0, 5, 5;
    Eigen::VectorXd j = jitter_spectrum(d);
    REQUIRE(j[2] > j[1]);
    REQUIRE(j[2] - j[1] == Catch::Approx(5e-9));
}
