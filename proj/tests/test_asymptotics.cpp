#include "doctest.h"

#include "gasnet/asymptotics.hpp"
#include "gasnet/distributions.hpp"
#include "gasnet/io.hpp"

#include <cmath>

using namespace gasnet;

namespace {

struct Fixture {
    GasNetwork net = load_network("networks/network1.json");
    SensorPlacement plc = SensorPlacement::standard(net);
    TopologyState topo = TopologyState::all_closed(net);
    SteadyState st = solve_steady_state(net, topo);
    NoiseModel nm = rsd_to_noise(0.10, st, plc);

    Vec truth_omega() const {
        Vec w(net.N() + net.L());
        w.head(net.N()) = st.p;
        w.tail(net.L()) = st.phi;
        return w;
    }
};

}  // namespace

TEST_CASE("fisher information block structure and linearity") {
    Fixture fx;
    FimSet f1 = fisher_information(fx.net, fx.topo, fx.plc, fx.nm, 50);
    FimSet f2 = fisher_information(fx.net, fx.topo, fx.plc, fx.nm, 100);
    CHECK((f2.J - 2.0 * f1.J).cwiseAbs().maxCoeff() < 1e-9);
    // off-diagonal blocks are exactly zero
    CHECK(f1.J.topRightCorner(fx.net.N(), fx.net.L()).cwiseAbs().maxCoeff() == 0.0);
    // without injection sensors the flow block is diagonal
    SensorPlacement noq = fx.plc;
    noq.delta_q.setZero();
    FimSet f3 = fisher_information(fx.net, fx.topo, noq, fx.nm, 1);
    Mat off = f3.Jphiphi;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fisher information matches the empirical score covariance") {
    Fixture fx;
    // score of the whitened Gaussian model: J = G' G per sample; Monte-Carlo
    // the outer product of score vectors at the truth
    LikelihoodModel m(fx.net, fx.topo, fx.plc, fx.nm);
    const int R = 4000;
    Mat acc = Mat::Zero(fx.net.N() + fx.net.L(), fx.net.N() + fx.net.L());
    Vec w = fx.truth_omega();
    for (int r = 0; r < R; ++r) {
        ObservationSet obs = generate_observations(fx.st, fx.nm, 1, 1234, r, fx.plc);
        m.set_observations(obs);
        // score = -d/dw of (1/2)|G w - y|^2 evaluated at truth = G'(y - G w)
        Vec score = m.G().transpose() * (m.ybar() - m.G() * w);
        acc += score * score.transpose();
    }
    acc /= R;
    Mat J = fisher_information(fx.net, fx.topo, fx.plc, fx.nm, 1).J;
    CHECK((acc - J).cwiseAbs().maxCoeff() / J.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("constraint gradient agrees with central differences") {
    Fixture fx;
    Vec w = fx.truth_omega();
    for (Index i = 0; i < w.size(); ++i) w[i] *= (1.0 + 0.01 * std::sin(double(i) + 1.0));
    Mat F = constraint_gradient(fx.net, fx.topo, w);
    Theta th{fx.topo, w};
    const double h = 1e-6;
    for (Index j = 0; j < w.size(); ++j) {
        Vec wp = w, wm = w;
        double step = h * std::max(1.0, std::abs(w[j]));
        wp[j] += step;
        wm[j] -= step;
        Vec fd = (constraint_f({fx.topo, wp}, fx.net) - constraint_f({fx.topo, wm}, fx.net)) /
                 (2.0 * step);
        CHECK((F.col(j) - fd).cwiseAbs().maxCoeff() <
              1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()) + 1e-6);
    }
    // zero-flow column entry vanishes
    Vec wz = fx.truth_omega();
    wz[fx.net.N() + 2] = 0.0;
    Mat Fz = constraint_gradient(fx.net, fx.topo, wz);
    CHECK(Fz(2, fx.net.N() + 2) == 0.0);
    CHECK(Fz.colPivHouseholderQr().rank() >= fx.net.L());
}

TEST_CASE("null space basis properties and the analytic basis span") {
    Fixture fx;
    Vec w = fx.truth_omega();
    Mat F = constraint_gradient(fx.net, fx.topo, w);
    Mat U = null_space_basis(F);
    CHECK(U.cols() == fx.net.N());
    CHECK((F * U).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((U.transpose() * U - Mat::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff() <
          1e-12);
    // Ftilde = [B diag(c)] has the analytic null basis [I; -diag^-1(c) B]
    IncidenceSet inc = build_incidence(fx.net, fx.topo);
    Mat Ft(fx.net.L(), fx.net.N() + fx.net.L());
    Ft.leftCols(fx.net.N()) = inc.B;
    Ft.rightCols(fx.net.L()) = Mat(fx.net.c().asDiagonal());
    Mat Util(fx.net.N() + fx.net.L(), fx.net.N());
    Util.topRows(fx.net.N()) = Mat::Identity(fx.net.N(), fx.net.N());
    Util.bottomRows(fx.net.L()) = -(fx.net.c().cwiseInverse().asDiagonal() * inc.B);
    CHECK((Ft * Util).cwiseAbs().maxCoeff() < 1e-12);
    // span(U(Ft)) equals span(orthonormalized Util): projector difference
    Mat U2 = null_space_basis(Ft);
    Mat P1 = U2 * U2.transpose();
    Eigen::HouseholderQR<Mat> qr(Util);
    Mat Q = qr.householderQ() * Mat::Identity(Util.rows(), Util.cols());
    Mat P2 = Q * Q.transpose();
    CHECK((P1 - P2).cwiseAbs().maxCoeff() < 1e-8);
    // projector idempotence
    Mat UU = U * U.transpose();
    CHECK((UU * UU - UU).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ccrb is PSD, scales as 1/T_a, and pseudo-inverse is consistent") {
    Fixture fx;
    Vec w = fx.truth_omega();
    Mat C1 = ccrb(fx.net, fx.topo, w, fx.plc, fx.nm, 100);
    Mat C2 = ccrb(fx.net, fx.topo, w, fx.plc, fx.nm, 200);
    CHECK((C1 - 2.0 * C2).cwiseAbs().maxCoeff() < 1e-8 * C1.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Mat> es(C1, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    Mat Cp = ccrb_pinv(fx.net, fx.topo, w, fx.plc, fx.nm, 100);
    // C * Cp * C = C (Moore-Penrose identity on the shared column space)
    CHECK((C1 * Cp * C1 - C1).cwiseAbs().maxCoeff() < 1e-6 * C1.cwiseAbs().maxCoeff());
}

TEST_CASE("pseudo-true parameters: correct model returns the truth") {
    Fixture fx;
    PseudoTrue pt = pseudo_true_params(fx.net, fx.topo, fx.st, fx.plc, fx.nm, 80);
    REQUIRE(pt.converged);
    CHECK((pt.omega_star - fx.truth_omega()).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(pt.deviance < 1e-6);
    // wrong model: feasible, positive misfit
    TopologyState wrong = fx.topo;
    wrong.closed[2] = false;
    PseudoTrue pw = pseudo_true_params(fx.net, wrong, fx.st, fx.plc, fx.nm, 80);
    REQUIRE(pw.converged);
    CHECK(pw.deviance > 1.0);
    CHECK(constraint_f({wrong, pw.omega_star}, fx.net).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("lambda vanishes when hypotheses coincide and scales with T_a") {
    Fixture fx;
    double l0 = noncentrality_lambda(fx.net, fx.topo, fx.topo, fx.st, fx.plc, fx.nm, 80);
    CHECK(std::abs(l0) < 1e-6);
    TopologyState h1 = fx.topo;
    h1.closed[2] = false;
    SteadyState truth = solve_steady_state(fx.net, h1);
    double l1 = noncentrality_lambda(fx.net, fx.topo, h1, truth, fx.plc, fx.nm, 80);
    double l2 = noncentrality_lambda(fx.net, fx.topo, h1, truth, fx.plc, fx.nm, 160);
    CHECK(l1 > 0.0);
    CHECK(l2 == doctest::Approx(2.0 * l1).epsilon(1e-6));
    // basis invariance is implied by the projector form; check against a
    // direct pseudo-inverse quadratic form
    PseudoTrue pt = pseudo_true_params(fx.net, fx.topo, truth, fx.plc, fx.nm, 80);
    Mat Cp = ccrb_pinv(fx.net, fx.topo, pt.omega_star, fx.plc, fx.nm, 80);
    TopologyState t1n = h1;
    t1n.normalize(fx.net);
    Vec w1(fx.net.N() + fx.net.L());
    w1.head(fx.net.N()) = truth.p;
    w1.tail(fx.net.L()) = truth.phi;
    CHECK(wald_statistic(w1, pt.omega_star, Cp) == doctest::Approx(l1).epsilon(1e-8));
}

TEST_CASE("wald noncentrality drives an exact prediction chain") {
    Fixture fx;
    TopologyState h1 = fx.topo;
    h1.closed[2] = false;
    SteadyState truth = solve_steady_state(fx.net, h1);
    WaldLambda wl = wald_noncentrality(fx.net, fx.topo, fx.st, truth, fx.plc, fx.nm, 80);
    CHECK(wl.lambda > 0.0);
    CHECK(wl.dof == fx.net.L() + fx.net.N());
    double pd = predict_pd(wl.lambda, 1e-3, wl.dof);
    CHECK(pd > 1e-3);
    CHECK(pd <= 1.0);
    CHECK(predict_pd(0.0, 0.01, 29) == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(predict_pd(50.0, 1e-3, 29) < predict_pd(90.0, 1e-3, 29));
}

TEST_CASE("required observations: inverse proportionality and round trip") {
    RequiredObservations a = required_observations(1.0, 0.999, 1e-3, 29);
    RequiredObservations b = required_observations(2.0, 0.999, 1e-3, 29);
    CHECK(std::abs(a.floor_value - 2 * b.floor_value) <= 1);
    CHECK(predict_pd(a.lambda_required, 1e-3, 29) == doctest::Approx(0.999).epsilon(1e-7));
    CHECK_THROWS_AS(required_observations(1.0, 1e-4, 1e-3, 29), NetworkError);
    CHECK_THROWS_AS(required_observations(0.0, 0.999, 1e-3, 29), NetworkError);
}

TEST_CASE("wald statistic basics") {
    Fixture fx;
    Vec w = fx.truth_omega();
    Mat Cp = ccrb_pinv(fx.net, fx.topo, w, fx.plc, fx.nm, 10);
    CHECK(wald_statistic(w, w, Cp) == 0.0);
    Vec w2 = w;
    w2[0] += 1.0;
    CHECK(wald_statistic(w2, w, Cp) >= 0.0);
}
