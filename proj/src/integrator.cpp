#include "trapmodes/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "trapmodes/errors.hpp"
#include "trapmodes/json_util.hpp"
#include "trapmodes/log.hpp"

namespace trapmodes {

namespace {

// Dormand-Prince 5(4) tableau, FSAL.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
// embedded error weights (5th order solution minus 4th order)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kShrink = 0.2;
constexpr double kGrow = 5.0;

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1, double atol, double rtol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step(const OdeRhs& rhs, double t0, const Eigen::VectorXd& y0,
                    const Eigen::VectorXd& f0, double span, const IntegratorSettings& s) {
    const Eigen::Index n = y0.size();
    double d0 = 0.0, dd1 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = s.abs_tol + s.rel_tol * std::abs(y0[i]);
        d0 += (y0[i] / sc) * (y0[i] / sc);
        dd1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / n);
    dd1 = std::sqrt(dd1 / n);
    double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
    h0 = std::min(h0, span);
    Eigen::VectorXd f1(n);
    rhs(t0 + h0, y0 + h0 * f0, f1);
    double d2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = s.abs_tol + s.rel_tol * std::abs(y0[i]);
        const double r = (f1[i] - f0[i]) / sc;
        d2 += r * r;
    }
    d2 = std::sqrt(d2 / n) / h0;
    const double dmax = std::max(dd1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                    : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, s.max_step, span});
}

}  // namespace

Eigen::VectorXd integrate_dense(const OdeRhs& rhs, double t0, const Eigen::VectorXd& y0,
                                double t1, const IntegratorSettings& settings,
                                const std::vector<double>& sample_times,
                                const std::function<void(double, const Eigen::VectorXd&)>& sink) {
    if (t1 < t0) throw ConfigError("integrate_dense requires t1 >= t0");
    const Eigen::Index n = y0.size();

    std::size_t next_sample = 0;
    auto emit_up_to = [&](double t, const auto& evaluate) {
        while (next_sample < sample_times.size() && sample_times[next_sample] <= t) {
            if (sink) sink(sample_times[next_sample], evaluate(sample_times[next_sample]));
            ++next_sample;
        }
    };
    emit_up_to(t0, [&](double) { return y0; });

    Eigen::VectorXd y = y0;
    if (t1 == t0) return y;

    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
    rhs(t0, y, k1);
    double t = t0;
    double h = initial_step(rhs, t0, y, k1, t1 - t0, settings);
    bool last_rejected = false;
    long steps = 0;

    while (t < t1) {
        if (++steps > settings.max_steps)
            throw ConvergenceFailure("integrator exceeded max_steps", h);
        if (h < std::max(1e-14, std::abs(t) * 1e-15))
            throw StiffnessError("step size underflow", t);
        if (t + h > t1) h = t1 - t;

        ytmp = y + h * (a21 * k1);
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ytmp, k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + h, ynew, k7);

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double errn = error_norm(err, y, ynew, settings.abs_tol, settings.rel_tol);

        if (errn <= 1.0) {
            if (next_sample < sample_times.size() && sample_times[next_sample] <= t + h) {
                const Eigen::VectorXd ydiff = ynew - y;
                const Eigen::VectorXd bspl = h * k1 - ydiff;
                const Eigen::VectorXd r4 = ydiff - h * k7 - bspl;
                const Eigen::VectorXd r5 =
                    h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                emit_up_to(t + h, [&](double ts) -> Eigen::VectorXd {
                    const double th = (ts - t) / h;
                    return y + th * (ydiff + (1.0 - th) * (bspl + th * (r4 + (1.0 - th) * r5)));
                });
            }
            t += h;
            y.swap(ynew);
            k1.swap(k7);  // FSAL
            double fac = kSafety * std::pow(errn, -0.2);
            fac = std::clamp(fac, kShrink, last_rejected ? 1.0 : kGrow);
            h = std::min(h * fac, settings.max_step);
            last_rejected = false;
        } else {
            h *= std::clamp(kSafety * std::pow(errn, -0.2), kShrink, 1.0);
            last_rejected = true;
        }
    }
    // tolerate samples equal to t1 up to roundoff
    emit_up_to(t1 + 1e-12, [&](double) { return y; });
    return y;
}

std::vector<IonState> integrate_nonlinear(const TrapConfig& trap, const IonState& initial,
                                          double t_final,
                                          const std::function<double(double)>& damping,
                                          const IntegratorSettings& settings,
                                          const std::vector<double>& sample_times) {
    const Eigen::Index n = trap.n_ions;
    if (initial.positions.rows() != n || initial.positions.cols() != 3)
        throw ConfigError("initial state does not match n_ions");

    auto pack = [n](const Eigen::MatrixXd& pos, const Eigen::MatrixXd& vel) {
        Eigen::VectorXd y(6 * n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (int axis = 0; axis < 3; ++axis) {
                y[3 * i + axis] = pos(i, axis);
                y[3 * n + 3 * i + axis] = vel(i, axis);
            }
        return y;
    };
    auto unpack = [n](double t, const Eigen::VectorXd& y) {
        IonState s;
        s.positions.resize(n, 3);
        s.velocities.resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i)
            for (int axis = 0; axis < 3; ++axis) {
                s.positions(i, axis) = y[3 * i + axis];
                s.velocities(i, axis) = y[3 * n + 3 * i + axis];
            }
        s.time = t;
        return s;
    };

    IonState work;
    work.positions.resize(n, 3);
    work.velocities.resize(n, 3);
    OdeRhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (int axis = 0; axis < 3; ++axis) {
                work.positions(i, axis) = y[3 * i + axis];
                work.velocities(i, axis) = y[3 * n + 3 * i + axis];
            }
        work.time = t;
        const Eigen::MatrixXd acc = eom_rhs(trap, work);
        const double g = damping ? damping(t) : 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (int axis = 0; axis < 3; ++axis) {
                dy[3 * i + axis] = work.velocities(i, axis);
                dy[3 * n + 3 * i + axis] = acc(i, axis) - g * work.velocities(i, axis);
            }
    };

    std::vector<IonState> out;
    out.reserve(sample_times.size() + 1);
    const Eigen::VectorXd yf = integrate_dense(
        rhs, initial.time, pack(initial.positions, initial.velocities), t_final, settings,
        sample_times, [&](double t, const Eigen::VectorXd& y) { out.push_back(unpack(t, y)); });
    if (out.empty() || out.back().time != t_final) out.push_back(unpack(t_final, yf));
    return out;
}

namespace {

OdeRhs hill_rhs(const HillSystem& hill) {
    const int f = hill.dim();
    return [hill, f](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const Eigen::MatrixXd m = hill.coefficient(t);
        dy.head(f) = y.tail(f);
        dy.tail(f) = -m * y.head(f);
    };
}

}  // namespace

Eigen::MatrixXd matrizant_at(const HillSystem& hill, double t,
                             const IntegratorSettings& settings) {
    const int f = hill.dim();
    const OdeRhs rhs = hill_rhs(hill);
    Eigen::MatrixXd phi(2 * f, 2 * f);
    for (int j = 0; j < 2 * f; ++j) {
        Eigen::VectorXd col = Eigen::VectorXd::Unit(2 * f, j);
        phi.col(j) = integrate_dense(rhs, 0.0, col, t, settings);
    }
    return phi;
}

Monodromy matrizant(const HillSystem& hill, const IntegratorSettings& settings) {
    constexpr double kUnitTol = 1e-8;
    const int f = hill.dim();
    Monodromy mono;
    mono.matrix = matrizant_at(hill, std::numbers::pi, settings);
    mono.det = mono.matrix.partialPivLu().determinant();

    Eigen::EigenSolver<Eigen::MatrixXd> es(mono.matrix);
    if (es.info() != Eigen::Success)
        throw ConvergenceFailure("monodromy eigenvalue iteration failed", 0.0);
    mono.eigenvalues = es.eigenvalues();

    int positive_imag = 0;
    double worst = 0.0;
    for (int i = 0; i < 2 * f; ++i) {
        const double mod = std::abs(mono.eigenvalues[i]);
        worst = std::max(worst, std::abs(mod - 1.0));
        if (mono.eigenvalues[i].imag() > 0.0) ++positive_imag;
        if (mod > 1.0 + kUnitTol) mono.unstable_moduli.push_back(mod);
    }
    std::sort(mono.unstable_moduli.rbegin(), mono.unstable_moduli.rend());
    mono.stable = worst <= kUnitTol && positive_imag == f;

    // pair each eigenvalue with its reciprocal partner: greedy nearest-product-to-1,
    // candidates ordered by ascending arg so ties resolve deterministically
    std::vector<int> order(2 * f);
    for (int i = 0; i < 2 * f; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int l, int r) {
        const double al = std::arg(mono.eigenvalues[l]);
        const double ar = std::arg(mono.eigenvalues[r]);
        return al != ar ? al < ar : l < r;
    });
    std::vector<bool> used(2 * f, false);
    for (int oi = 0; oi < 2 * f; ++oi) {
        const int i = order[oi];
        if (used[i]) continue;
        int best = -1;
        double best_gap = std::numeric_limits<double>::infinity();
        for (int oj = 0; oj < 2 * f; ++oj) {
            const int j = order[oj];
            if (j == i || used[j]) continue;
            const double gap = std::abs(mono.eigenvalues[i] * mono.eigenvalues[j] - 1.0);
            if (gap < best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        if (best < 0) break;
        used[i] = used[best] = true;
        mono.pairs.emplace_back(i, best);
    }

    if (mono.stable) {
        std::vector<double> betas;
        betas.reserve(f);
        for (int i = 0; i < 2 * f; ++i)
            if (mono.eigenvalues[i].imag() > 0.0)
                betas.push_back(std::arg(mono.eigenvalues[i]) / std::numbers::pi);
        std::sort(betas.begin(), betas.end());
        mono.exponents = Eigen::Map<Eigen::VectorXd>(betas.data(), f);
    }
    return mono;
}

MathieuExponent mathieu_exponent(double a, double q, const IntegratorSettings& settings) {
    const Monodromy mono = matrizant(HillSystem::mathieu(a, q), settings);
    MathieuExponent out;
    out.stable = mono.stable;
    out.max_modulus = mono.eigenvalues.cwiseAbs().maxCoeff();
    if (mono.stable) out.beta = mono.exponents[0];
    return out;
}

}  // namespace trapmodes
