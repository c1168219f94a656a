#include "trapmodes/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "trapmodes/errors.hpp"
#include "trapmodes/json_util.hpp"
#include "trapmodes/log.hpp"

namespace trapmodes {

namespace {

constexpr double kPi = std::numbers::pi;
using Complex = std::complex<double>;

// Truncated continued matrix inversions of the harmonic recursion
//   R_{2n} C_{2n} = Q2 (C_{2n-2} + C_{2n+2}) + Q4 (C_{2n-4} + C_{2n+4})
// at fixed beta, R_{2n} = A - (2n+beta)^2. Without Q4 the recursion is block
// tridiagonal and the levels are f x f. With Q4 it is pentadiagonal; grouping
// consecutive harmonics D_k = (C_{4k}, C_{4k+2}) restores the tridiagonal
// pattern with 2f x 2f levels and couplings
//   q_up = [[Q4, 0], [Q2, Q4]] (to D_{k+1}),  q_down = q_up^T (to D_{k-1}).
struct ChainFactorization {
    bool grouped = false;
    int level_dim = 0;
    double det = 0.0;  // sign * exp(log|det|), magnitude clamped at exp(300)
    double log_abs_det = 0.0;
    int det_sign = 0;
    Eigen::MatrixXd y;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> ascending;   // P_k, k = 1..depth
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> descending;  // M_{-k}, k = 1..depth
    Eigen::MatrixXd q_up;
    Eigen::MatrixXd q_down;
};

ChainFactorization factor_chain(const HillSystem& hill, double beta, int depth) {
    if (depth < 5) throw ConfigError("continued-inversion depth must be at least 5");
    const int f = hill.dim();
    if (f < 1 || hill.A.cols() != f || hill.Q2.rows() != f || hill.Q2.cols() != f)
        throw ConfigError("malformed Hill system");

    ChainFactorization chain;
    chain.grouped = hill.has_q4();
    const int d = chain.grouped ? 2 * f : f;
    chain.level_dim = d;

    auto r_block = [&](int n) {
        Eigen::MatrixXd r = hill.A;
        const double w = 2.0 * n + beta;
        r.diagonal().array() -= w * w;
        return r;
    };
    auto level = [&](int k) {
        if (!chain.grouped) return r_block(k);
        Eigen::MatrixXd r(d, d);
        r.topLeftCorner(f, f) = r_block(2 * k);
        r.topRightCorner(f, f) = -hill.Q2;
        r.bottomLeftCorner(f, f) = -hill.Q2;
        r.bottomRightCorner(f, f) = r_block(2 * k + 1);
        return r;
    };

    if (!chain.grouped) {
        chain.q_up = hill.Q2;
        chain.q_down = hill.Q2;
    } else {
        chain.q_up = Eigen::MatrixXd::Zero(d, d);
        chain.q_up.topLeftCorner(f, f) = hill.Q4;
        chain.q_up.bottomLeftCorner(f, f) = hill.Q2;
        chain.q_up.bottomRightCorner(f, f) = hill.Q4;
        chain.q_down = chain.q_up.transpose();
    }

    auto checked_lu = [&](Eigen::MatrixXd m, int k) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(std::move(m));
        if (lu.rcond() < 1e-14)
            throw ExpansionBreakdown(
                "continued-inversion level is numerically singular at beta=" +
                    std::to_string(beta),
                k);
        return lu;
    };

    chain.ascending.resize(depth);
    chain.descending.resize(depth);
    {
        Eigen::MatrixXd p = level(depth);
        for (int k = depth;; --k) {
            chain.ascending[k - 1] = checked_lu(std::move(p), k);
            if (k == 1) break;
            p = level(k - 1) - chain.q_up * chain.ascending[k - 1].solve(chain.q_down);
        }
    }
    {
        Eigen::MatrixXd m = level(-depth);
        for (int k = -depth;; ++k) {
            chain.descending[-k - 1] = checked_lu(std::move(m), k);
            if (k == -1) break;
            m = level(k + 1) - chain.q_down * chain.descending[-k - 1].solve(chain.q_up);
        }
    }
    chain.y = level(0) - chain.q_down * chain.descending[0].solve(chain.q_up) -
              chain.q_up * chain.ascending[0].solve(chain.q_down);

    {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(chain.y);
        int sign = static_cast<int>(lu.permutationP().determinant());
        double logabs = 0.0;
        for (int i = 0; i < d; ++i) {
            const double u = lu.matrixLU()(i, i);
            if (u == 0.0) {
                sign = 0;
                break;
            }
            if (u < 0.0) sign = -sign;
            logabs += std::log(std::abs(u));
        }
        chain.det_sign = sign;
        chain.log_abs_det = logabs;
        chain.det = sign * std::exp(std::min(logabs, 300.0));
    }
    return chain;
}

// Orthonormal kernel vectors of y (singular directions below rel_tol).
Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& y, double rel_tol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s[0];
    int dim = 0;
    for (int i = static_cast<int>(s.size()) - 1; i >= 0 && s[i] <= rel_tol * smax; --i) ++dim;
    return svd.matrixV().rightCols(dim);
}

// Bracketed root refinement: bisection to 1e-8, then Illinois-damped secant.
double refine_bracket(const std::function<double(double)>& fn, double lo, double hi, double flo,
                      double fhi, double tol) {
    while (hi - lo > 1e-8) {
        const double mid = 0.5 * (lo + hi);
        const double fm = fn(mid);
        if (fm == 0.0) return mid;
        if ((flo < 0.0) != (fm < 0.0)) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    double prev = 0.5 * (lo + hi);
    int side = 0;
    for (int iter = 0; iter < 80; ++iter) {
        double cand = (lo * fhi - hi * flo) / (fhi - flo);
        if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
        const double fc = fn(cand);
        if (fc == 0.0 || std::abs(cand - prev) < tol) return cand;
        prev = cand;
        if ((fc < 0.0) == (flo < 0.0)) {
            lo = cand;
            flo = fc;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = cand;
            fhi = fc;
            if (side == 1) flo *= 0.5;
            side = 1;
        }
        if (hi - lo < tol) return 0.5 * (lo + hi);
    }
    return prev;
}

struct Root {
    double beta = 0.0;
    int kernel_dim = 0;
    bool from_oracle = false;
};

}  // namespace

std::pair<double, Eigen::MatrixXd> y_determinant(const HillSystem& hill, double beta,
                                                 int depth) {
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("beta must lie strictly inside (0,1)");
    ChainFactorization chain = factor_chain(hill, beta, depth);
    return {chain.det, std::move(chain.y)};
}

ExponentScan find_exponents(const HillSystem& hill, int scan_points, int depth,
                            const FloquetOptions& options) {
    const int f = hill.dim();
    if (scan_points == 0) scan_points = options.scan_per_mode * f;
    if (scan_points < 10 * f)
        throw ConfigError("exponent scan needs at least 10 points per mode");
    const double sym_defect =
        std::max({(hill.A - hill.A.transpose()).cwiseAbs().maxCoeff(),
                  (hill.Q2 - hill.Q2.transpose()).cwiseAbs().maxCoeff(),
                  hill.Q4.size() ? (hill.Q4 - hill.Q4.transpose()).cwiseAbs().maxCoeff() : 0.0});
    if (sym_defect > 1e-9 * std::max(1.0, hill.A.cwiseAbs().maxCoeff()))
        throw ConfigError("Hill matrices must be symmetric");

    ConvergenceFailure last_failure("", 0.0);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int d = depth << attempt;
        try {
            auto det_at = [&hill, d](double beta) { return factor_chain(hill, beta, d).det; };
            auto det_deep = [&hill, d](double beta) {
                return factor_chain(hill, beta, d + 5).det;
            };

            const double lo = options.edge_margin;
            const double hi = 1.0 - options.edge_margin;
            const double spacing = (hi - lo) / (scan_points - 1);
            std::vector<double> grid(scan_points), vals(scan_points);
            for (int i = 0; i < scan_points; ++i) {
                grid[i] = lo + spacing * i;
                try {
                    vals[i] = det_at(grid[i]);
                } catch (const ExpansionBreakdown&) {
                    vals[i] = std::numeric_limits<double>::quiet_NaN();
                }
            }

            std::vector<Root> roots;
            auto add_root = [&](double beta) {
                if (beta < options.integral_reject || beta > 1.0 - options.integral_reject)
                    return;
                for (const Root& r : roots)
                    if (std::abs(r.beta - beta) < 10.0 * options.root_tol) return;
                const int dim = static_cast<int>(
                    kernel_basis(factor_chain(hill, beta, d).y, options.kernel_rel_tol).cols());
                if (dim == 0) return;
                roots.push_back({beta, dim, false});
            };
            auto scan_range = [&](double wlo, double whi, int pts) {
                double prev_b = wlo, prev_v;
                try {
                    prev_v = det_at(prev_b);
                } catch (const ExpansionBreakdown&) {
                    prev_v = std::numeric_limits<double>::quiet_NaN();
                }
                if (prev_v == 0.0) add_root(prev_b);
                for (int i = 1; i < pts; ++i) {
                    const double b = wlo + (whi - wlo) * i / (pts - 1);
                    double v;
                    try {
                        v = det_at(b);
                    } catch (const ExpansionBreakdown&) {
                        v = std::numeric_limits<double>::quiet_NaN();
                    }
                    if (v == 0.0)
                        add_root(b);
                    else if (std::isfinite(prev_v) && std::isfinite(v) && prev_v * v < 0.0)
                        add_root(refine_bracket(det_at, prev_b, b, prev_v, v, options.root_tol));
                    prev_b = b;
                    prev_v = v;
                }
            };

            for (int i = 0; i + 1 < scan_points; ++i) {
                if (vals[i] == 0.0) add_root(grid[i]);
                if (!std::isfinite(vals[i]) || !std::isfinite(vals[i + 1])) continue;
                if (vals[i] * vals[i + 1] < 0.0)
                    add_root(
                        refine_bracket(det_at, grid[i], grid[i + 1], vals[i], vals[i + 1],
                                       options.root_tol));
            }
            if (!vals.empty() && vals.back() == 0.0) add_root(grid.back());

            // depth robustness: the root must be reproduced with five more levels
            for (const Root& r : roots) {
                if (r.from_oracle) continue;
                const double wlo = std::max(lo, r.beta - 1e-6);
                const double whi = std::min(hi, r.beta + 1e-6);
                const double flo2 = det_deep(wlo), fhi2 = det_deep(whi);
                if (flo2 * fhi2 < 0.0) {
                    const double b2 =
                        refine_bracket(det_deep, wlo, whi, flo2, fhi2, options.root_tol);
                    if (std::abs(b2 - r.beta) > options.depth_check_tol)
                        throw ConvergenceFailure(
                            "continued inversions not converged at depth " + std::to_string(d),
                            std::abs(b2 - r.beta));
                }
            }

            auto count_roots = [&roots]() {
                int c = 0;
                for (const Root& r : roots) c += r.kernel_dim;
                return c;
            };

            ExponentScan scan;
            auto finish = [&](std::vector<Root> rs) {
                std::sort(rs.begin(), rs.end(),
                          [](const Root& a, const Root& b) { return a.beta < b.beta; });
                scan.modes.clear();
                for (const Root& r : rs) {
                    FloquetMode mode;
                    mode.beta = r.beta;
                    mode.kernel_dim = r.kernel_dim;
                    scan.modes.push_back(std::move(mode));
                }
                return scan;
            };

            if (count_roots() == f) return finish(std::move(roots));

            // The scan disagrees with the expected mode count: let the
            // monodromy oracle arbitrate.
            TM_INFO("det-Y scan found %d of %d exponents, consulting the monodromy oracle",
                    count_roots(), f);
            const Monodromy mono = matrizant(hill, options.oracle);
            if (!mono.stable) {
                scan.stable = false;
                scan.unstable_moduli = mono.unstable_moduli;
                for (int i = 0; i < mono.eigenvalues.size(); ++i) {
                    const Complex ev = mono.eigenvalues[i];
                    if (std::abs(std::abs(ev) - 1.0) <= 1e-8 && ev.imag() > 0.0)
                        scan.oracle_betas.push_back(std::arg(ev) / kPi);
                }
                std::sort(scan.oracle_betas.begin(), scan.oracle_betas.end());
                return finish(std::move(roots));
            }

            scan.oracle_betas.assign(mono.exponents.data(),
                                     mono.exponents.data() + mono.exponents.size());
            auto unmatched = [&]() {
                std::vector<int> capacity;
                for (const Root& r : roots) capacity.push_back(r.kernel_dim);
                std::vector<double> un;
                for (const double ob : scan.oracle_betas) {
                    int best = -1;
                    double best_gap = options.oracle_match_tol;
                    for (std::size_t i = 0; i < roots.size(); ++i) {
                        const double gap = std::abs(roots[i].beta - ob);
                        if (gap <= best_gap && capacity[i] > 0) {
                            best_gap = gap;
                            best = static_cast<int>(i);
                        }
                    }
                    if (best >= 0)
                        --capacity[best];
                    else
                        un.push_back(ob);
                }
                return un;
            };

            // Pass 1: tightly spaced simple roots hide between grid points;
            // rescan finely around each missing oracle value.
            for (const double ob : unmatched())
                scan_range(std::max(lo, ob - 2.0 * spacing), std::min(hi, ob + 2.0 * spacing),
                           129);
            // Pass 2: exactly degenerate roots never change the sign of det Y;
            // adopt the oracle beta when Y has a kernel there.
            for (const double ob : unmatched()) {
                if (ob < options.integral_reject || ob > 1.0 - options.integral_reject) continue;
                bool merged = false;
                for (const Root& r : roots)
                    if (std::abs(r.beta - ob) < 10.0 * options.root_tol) merged = true;
                if (merged) continue;
                const int dim = static_cast<int>(
                    kernel_basis(factor_chain(hill, ob, d).y, options.kernel_rel_tol).cols());
                if (dim > 0) roots.push_back({ob, dim, true});
            }

            if (count_roots() > f) {
                // drop scan artifacts the oracle does not corroborate
                std::vector<Root> kept;
                for (const Root& r : roots)
                    for (const double ob : scan.oracle_betas)
                        if (std::abs(r.beta - ob) <= options.oracle_match_tol) {
                            kept.push_back(r);
                            break;
                        }
                roots = std::move(kept);
            }
            if (count_roots() == f) return finish(std::move(roots));
            throw IncompleteSpectrum(
                "found " + std::to_string(count_roots()) + " of " + std::to_string(f) +
                    " exponents even with the oracle's help",
                scan.oracle_betas);
        } catch (const ConvergenceFailure& e) {
            last_failure = e;
            TM_WARN("exponent search retrying at doubled depth: %s", e.what());
        }
    }
    throw last_failure;
}

std::vector<FloquetMode> mode_ladder(const HillSystem& hill, double beta, int depth, int n_max,
                                     const FloquetOptions& options) {
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("beta must lie strictly inside (0,1)");
    if (n_max < 1) throw ConfigError("ladder needs n_max >= 1");
    const int f = hill.dim();
    const bool grouped = hill.has_q4();
    const int levels_needed = grouped ? n_max / 2 + 1 : n_max;
    depth = std::max(depth, levels_needed + 5);

    const ChainFactorization chain = factor_chain(hill, beta, depth);
    const Eigen::MatrixXd kernel = kernel_basis(chain.y, options.kernel_rel_tol);
    if (kernel.cols() == 0)
        throw StaleRoot("Y_{2,beta} has no kernel at beta=" + std::to_string(beta));

    std::vector<FloquetMode> modes;
    for (int kv = 0; kv < kernel.cols(); ++kv) {
        Eigen::VectorXd d0 = kernel.col(kv);
        {
            const Eigen::VectorXd c0part = grouped ? d0.head(f).eval() : d0;
            Eigen::Index imax = 0;
            const double amax = c0part.cwiseAbs().maxCoeff(&imax);
            double pivot = c0part[imax];
            if (amax <= 1e-12) {
                d0.cwiseAbs().maxCoeff(&imax);
                pivot = d0[imax];
            }
            if (pivot < 0.0) d0 = -d0;
        }

        FloquetMode mode;
        mode.beta = beta;
        mode.kernel_dim = static_cast<int>(kernel.cols());
        auto put = [&](int harmonic, const Eigen::VectorXd& c) {
            if (std::abs(harmonic) <= 2 * n_max)
                mode.ladder[harmonic] = c.cast<Complex>();
        };

        if (!grouped) {
            put(0, d0);
            Eigen::VectorXd up = d0;
            Eigen::VectorXd down = d0;
            for (int k = 1; k <= n_max; ++k) {
                up = chain.ascending[k - 1].solve(chain.q_down * up);
                down = chain.descending[k - 1].solve(chain.q_up * down);
                put(2 * k, up);
                put(-2 * k, down);
            }
        } else {
            put(0, d0.head(f));
            put(2, d0.tail(f));
            Eigen::VectorXd up = d0;
            Eigen::VectorXd down = d0;
            for (int k = 1; k <= n_max / 2 + (n_max % 2); ++k) {
                up = chain.ascending[k - 1].solve(chain.q_down * up);
                down = chain.descending[k - 1].solve(chain.q_up * down);
                put(4 * k, up.head(f));
                put(4 * k + 2, up.tail(f));
                put(-4 * k, down.head(f));
                put(-4 * k + 2, down.tail(f));
            }
        }
        modes.push_back(std::move(mode));
    }
    return modes;
}

double ladder_residual(const HillSystem& hill, const FloquetMode& mode, int samples) {
    const int f = hill.dim();
    double worst = 0.0;
    for (int m = 0; m < samples; ++m) {
        const double t = m * kPi / samples;
        Eigen::VectorXcd u = Eigen::VectorXcd::Zero(f);
        Eigen::VectorXcd udd = Eigen::VectorXcd::Zero(f);
        for (const auto& [h, c] : mode.ladder) {
            const double w = h + mode.beta;
            const Complex phase = std::exp(Complex(0.0, w * t));
            u += phase * c;
            udd -= w * w * phase * c;
        }
        Eigen::VectorXcd r = udd + hill.coefficient(t) * u;
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    return worst;
}

Eigen::MatrixXcd FLTransform::u(double t) const {
    const int f = dim();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(f, f);
    for (const auto& [h, m] : u_fourier) out += std::exp(Complex(0.0, h * t)) * m;
    return out;
}

Eigen::MatrixXcd FLTransform::v(double t) const {
    const int f = dim();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(f, f);
    for (const auto& [h, m] : v_fourier) out += std::exp(Complex(0.0, h * t)) * m;
    return out;
}

Eigen::MatrixXcd FLTransform::gamma(double t) const {
    const int f = dim();
    const Eigen::MatrixXcd ut = u(t);
    const Eigen::MatrixXcd vt = v(t);
    Eigen::MatrixXcd g(2 * f, 2 * f);
    g.topLeftCorner(f, f) = ut;
    g.topRightCorner(f, f) = ut.conjugate();
    g.bottomLeftCorner(f, f) = vt;
    g.bottomRightCorner(f, f) = vt.conjugate();
    return g;
}

Eigen::MatrixXcd FLTransform::gamma_inverse(double t) const {
    const int f = dim();
    const Eigen::MatrixXcd ut = u(t);
    const Eigen::MatrixXcd vt = v(t);
    const Complex i(0.0, 1.0);
    Eigen::MatrixXcd g(2 * f, 2 * f);
    g.topLeftCorner(f, f) = i * vt.adjoint();
    g.topRightCorner(f, f) = -i * ut.adjoint();
    g.bottomLeftCorner(f, f) = -i * vt.transpose();
    g.bottomRightCorner(f, f) = i * ut.transpose();
    return g;
}

Eigen::MatrixXcd FLTransform::floquet_matrix(double t) const {
    const int f = dim();
    Eigen::VectorXcd phases(2 * f);
    for (int j = 0; j < f; ++j) {
        phases[j] = std::exp(Complex(0.0, betas[j] * t));
        phases[f + j] = std::exp(Complex(0.0, -betas[j] * t));
    }
    return gamma(t) * phases.asDiagonal() * gamma_inverse(0.0);
}

namespace {

nlohmann::json complex_matrix_to_json(const Eigen::MatrixXcd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

nlohmann::json FLTransform::to_json() const {
    nlohmann::json j;
    j["betas"] = vector_to_json(betas);
    j["normalization_applied"] = normalization_applied;
    nlohmann::json uj = nlohmann::json::object(), vj = nlohmann::json::object();
    for (const auto& [h, m] : u_fourier) uj[std::to_string(h)] = complex_matrix_to_json(m);
    for (const auto& [h, m] : v_fourier) vj[std::to_string(h)] = complex_matrix_to_json(m);
    j["u_fourier"] = std::move(uj);
    j["v_fourier"] = std::move(vj);
    return j;
}

FLTransform build_fl_transform(const std::vector<FloquetMode>& modes) {
    if (modes.empty()) throw ConfigError("Floquet-Lyapunov assembly needs modes");
    const int f = static_cast<int>(modes.size());
    for (const FloquetMode& mode : modes) {
        if (mode.ladder.empty()) throw ConfigError("mode ladders must be filled");
        for (const auto& [h, c] : mode.ladder)
            if (c.size() != f)
                throw ConfigError("Floquet-Lyapunov assembly needs exactly f modes of dimension f");
    }

    std::vector<int> order(modes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int l, int r) { return modes[l].beta < modes[r].beta; });

    FLTransform t;
    t.betas.resize(f);
    for (int j = 0; j < f; ++j) t.betas[j] = modes[order[j]].beta;
    for (int j = 0; j < f; ++j) {
        const FloquetMode& mode = modes[order[j]];
        for (const auto& [h, c] : mode.ladder) {
            if (!t.u_fourier.count(h)) {
                t.u_fourier[h] = Eigen::MatrixXcd::Zero(f, f);
                t.v_fourier[h] = Eigen::MatrixXcd::Zero(f, f);
            }
            t.u_fourier[h].col(j) = c;
            t.v_fourier[h].col(j) = Complex(0.0, h + mode.beta) * c;
        }
    }

    const Eigen::MatrixXcd u0 = t.u(0.0);
    const Eigen::MatrixXcd v0 = t.v(0.0);
    const Eigen::MatrixXcd s = Complex(0.0, -2.0) * v0.transpose() * u0;
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if (s.imag().cwiseAbs().maxCoeff() > 1e-9 * scale)
        TM_WARN("mode pairing matrix has imaginary residue %.3e",
                s.imag().cwiseAbs().maxCoeff());
    const Eigen::MatrixXd sr = 0.5 * (s.real() + s.real().transpose());
    if ((s.real() - sr).cwiseAbs().maxCoeff() > 1e-9 * scale)
        TM_WARN("mode pairing matrix asymmetric by %.3e",
                (s.real() - sr).cwiseAbs().maxCoeff());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sr);
    if (es.info() != Eigen::Success)
        throw DegeneratePairing("normalization eigendecomposition failed");
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
        throw DegeneratePairing("mode normalization matrix is not positive definite");
    const Eigen::MatrixXcd n = es.operatorInverseSqrt().cast<Complex>();
    for (auto& [h, m] : t.u_fourier) m = m * n;
    for (auto& [h, m] : t.v_fourier) m = m * n;
    t.normalization_applied = true;
    return t;
}

ModeEvolution evolve_modes(const FLTransform& transform, const Eigen::VectorXd& initial,
                           double t) {
    const int f = transform.dim();
    if (initial.size() != 2 * f)
        throw ConfigError("initial condition must have phase-space dimension 2f");

    const Eigen::VectorXcd chi0 = transform.gamma_inverse(0.0) * initial.cast<Complex>();
    Eigen::VectorXcd chi(2 * f);
    for (int j = 0; j < f; ++j) {
        chi[j] = chi0[j] * std::exp(Complex(0.0, transform.betas[j] * t));
        chi[f + j] = chi0[f + j] * std::exp(Complex(0.0, -transform.betas[j] * t));
    }
    const Eigen::VectorXcd rec = transform.gamma(t) * chi;
    const double imag = rec.imag().cwiseAbs().maxCoeff();
    if (imag > 1e-9 * std::max(1.0, rec.real().cwiseAbs().maxCoeff()))
        TM_WARN("mode evolution lost realness by %.3e", imag);
    return {std::move(chi), rec.real()};
}

}  // namespace trapmodes
