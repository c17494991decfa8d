#include "gesdispatch/lp.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace ges {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard form: min c'x  s.t.  A x = b,  0 <= x,  x_j <= u_j (u_j may be inf).
struct StandardForm {
    SpMat A;
    Vec b;
    Vec c;
    Vec u;
};

struct IpmResult {
    bool converged = false;
    bool diverged = false;
    Vec x, y, z, v;
    int iterations = 0;
    double pres = 0.0, dres = 0.0, gap = 0.0;
};

double max_step(const Vec& x, const Vec& dx, const std::vector<char>* mask = nullptr) {
    double a = 1.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (mask && !(*mask)[static_cast<std::size_t>(j)]) continue;
        if (dx[j] < 0) a = std::min(a, -x[j] / dx[j]);
    }
    return a;
}

IpmResult ipm(const StandardForm& sf, double tol, int max_iter) {
    const SpMat& A = sf.A;
    const SpMat At = A.transpose();
    const Eigen::Index m = A.rows(), n = A.cols();
    std::vector<char> has_ub(static_cast<std::size_t>(n), 0);
    Vec u = Vec::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j)
        if (std::isfinite(sf.u[j])) {
            has_ub[static_cast<std::size_t>(j)] = 1;
            u[j] = sf.u[j];
        }
    auto ub = [&](Eigen::Index j) { return has_ub[static_cast<std::size_t>(j)] != 0; };
    Eigen::Index nu = 0;
    for (char h : has_ub) nu += h;

    IpmResult r;
    Eigen::SimplicialLDLT<SpMat> ldlt;
    SpMat M;

    auto factorize = [&](const Vec& theta) {
        M = A * theta.asDiagonal() * At;
        double reg = 1e-10;
        for (int attempt = 0; attempt < 6; ++attempt) {
            SpMat Mr = M;
            for (Eigen::Index i = 0; i < m; ++i) Mr.coeffRef(i, i) += reg * (1.0 + Mr.coeff(i, i));
            ldlt.compute(Mr);
            if (ldlt.info() == Eigen::Success) return true;
            reg *= 100.0;
        }
        return false;
    };

    // Regularized factor with iterative refinement against the exact matrix.
    auto solve_normal = [&](const Vec& rhs) {
        Vec sol = ldlt.solve(rhs);
        double prev = kInf;
        for (int k = 0; k < 5; ++k) {
            const Vec res = rhs - M * sol;
            const double err = res.cwiseAbs().maxCoeff();
            if (!(err < prev) || err <= 1e-15 * (1.0 + rhs.cwiseAbs().maxCoeff())) break;
            prev = err;
            sol += ldlt.solve(res);
        }
        return sol;
    };

    // Starting point from the least-norm solution of A x = b.
    Vec x(n), z(n), w = Vec::Zero(n), v = Vec::Zero(n), y = Vec::Zero(m);
    {
        if (!factorize(Vec::Ones(n))) return r;
        Vec xt = At * ldlt.solve(sf.b);
        Vec yt = ldlt.solve(A * sf.c);
        Vec zt = sf.c - At * yt;
        const double xscale = std::max(1.0, xt.cwiseAbs().maxCoeff() * 0.1);
        const double zscale = std::max(1.0, zt.cwiseAbs().maxCoeff() * 0.1);
        for (Eigen::Index j = 0; j < n; ++j) {
            x[j] = std::max(std::abs(xt[j]), std::min(xscale, 1.0));
            if (ub(j)) {
                x[j] = std::min(x[j], 0.5 * u[j]);
                w[j] = u[j] - x[j];
                v[j] = std::max(std::abs(zt[j]), std::min(zscale, 1.0));
            }
            z[j] = std::max(std::abs(zt[j]), std::min(zscale, 1.0));
        }
        y = yt;
    }

    const double bnorm = 1.0 + sf.b.cwiseAbs().maxCoeff();
    const double cnorm = 1.0 + sf.c.cwiseAbs().maxCoeff();
    const double unorm = 1.0 + (nu > 0 ? u.cwiseAbs().maxCoeff() : 0.0);
    double best_merit = kInf;
    int stall = 0;

    for (int it = 0; it <= max_iter; ++it) {
        r.iterations = it;
        Vec rb = sf.b - A * x;
        Vec ru = Vec::Zero(n);
        for (Eigen::Index j = 0; j < n; ++j)
            if (ub(j)) ru[j] = u[j] - x[j] - w[j];
        Vec rc = sf.c - At * y - z + v;
        const double pobj = sf.c.dot(x);
        const double dobj = sf.b.dot(y) - u.dot(v);
        const double mu = (x.dot(z) + w.dot(v)) / static_cast<double>(n + nu);
        r.pres = std::max(rb.cwiseAbs().maxCoeff() / bnorm, nu > 0 ? ru.cwiseAbs().maxCoeff() / unorm : 0.0);
        r.dres = rc.cwiseAbs().maxCoeff() / cnorm;
        r.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
        if (m == 0) r.pres = 0.0;
        if (r.pres <= tol && r.dres <= tol && r.gap <= tol) {
            r.converged = true;
            break;
        }
        if (!std::isfinite(mu) || x.cwiseAbs().maxCoeff() > 1e14 || y.cwiseAbs().maxCoeff() > 1e14 ||
            z.cwiseAbs().maxCoeff() > 1e14) {
            r.diverged = true;
            break;
        }
        const double merit = std::max({r.pres, r.dres, r.gap});
        if (merit < 0.5 * best_merit) {
            best_merit = merit;
            stall = 0;
        } else if (++stall > 40) {
            break;
        }
        if (it == max_iter) break;

        Vec theta(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            double d = z[j] / x[j] + (ub(j) ? v[j] / w[j] : 0.0);
            theta[j] = 1.0 / (d + 1e-12);
        }
        if (!factorize(theta)) break;

        auto solve_dir = [&](const Vec& rxz, const Vec& rwv, Vec& dx, Vec& dy, Vec& dz, Vec& dw, Vec& dv) {
            Vec rhat = rc - rxz.cwiseQuotient(x);
            for (Eigen::Index j = 0; j < n; ++j)
                if (ub(j)) rhat[j] += (rwv[j] - v[j] * ru[j]) / w[j];
            dy = solve_normal(rb + A * theta.cwiseProduct(rhat));
            dx = theta.cwiseProduct(At * dy - rhat);
            dz = (rxz - z.cwiseProduct(dx)).cwiseQuotient(x);
            dw = Vec::Zero(n);
            dv = Vec::Zero(n);
            for (Eigen::Index j = 0; j < n; ++j)
                if (ub(j)) {
                    dw[j] = ru[j] - dx[j];
                    dv[j] = (rwv[j] - v[j] * dw[j]) / w[j];
                }
        };

        Vec dx, dy, dz, dw, dv;
        Vec rxz = -x.cwiseProduct(z);
        Vec rwv = -w.cwiseProduct(v);
        solve_dir(rxz, rwv, dx, dy, dz, dw, dv);
        const double ap_aff = std::min(max_step(x, dx), max_step(w, dw, &has_ub));
        const double ad_aff = std::min(max_step(z, dz), max_step(v, dv, &has_ub));
        const double mu_aff = ((x + ap_aff * dx).dot(z + ad_aff * dz) + (w + ap_aff * dw).dot(v + ad_aff * dv)) /
                              static_cast<double>(n + nu);
        double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);
        // Keep complementarity from collapsing ahead of primal feasibility.
        sigma = std::max(sigma, std::min(1.0, 1e-2 * r.pres / mu));

        rxz = Vec::Constant(n, sigma * mu) - x.cwiseProduct(z) - dx.cwiseProduct(dz);
        rwv = Vec::Zero(n);
        for (Eigen::Index j = 0; j < n; ++j)
            if (ub(j)) rwv[j] = sigma * mu - w[j] * v[j] - dw[j] * dv[j];
        solve_dir(rxz, rwv, dx, dy, dz, dw, dv);
        const double ap = std::min(1.0, 0.9995 * std::min(max_step(x, dx), max_step(w, dw, &has_ub)));
        const double ad = std::min(1.0, 0.9995 * std::min(max_step(z, dz), max_step(v, dv, &has_ub)));
        x += ap * dx;
        w += ap * dw;
        y += ad * dy;
        z += ad * dz;
        v += ad * dv;
        for (Eigen::Index j = 0; j < n; ++j) {
            x[j] = std::max(x[j], 1e-300);
            z[j] = std::max(z[j], 1e-300);
            if (ub(j)) {
                w[j] = std::max(w[j], 1e-300);
                v[j] = std::max(v[j], 1e-300);
            }
        }
    }
    r.x = x;
    r.y = y;
    r.z = z;
    r.v = v;
    return r;
}

// Mapping from an original variable to standard-form columns.
struct ColMap {
    enum Kind { Fixed, Shift, Flip, Split } kind = Fixed;
    double base = 0.0;     ///< x = base + col (Shift), base - col (Flip), base (Fixed)
    Eigen::Index col = -1; ///< primary column
    Eigen::Index col2 = -1;
};

struct Transformed {
    StandardForm sf;
    std::vector<ColMap> cols;
    std::vector<Eigen::Index> row_index; ///< original row -> standard-form row, -1 if dropped
    Vec row_scale, col_scale;
    std::vector<std::string> conflicts;
};

Transformed transform(const LpProblem& p, double tol) {
    Transformed tr;
    const std::size_t nv = p.num_vars();
    tr.cols.resize(nv);
    Eigen::Index ncol = 0;
    std::vector<double> ucol;
    std::vector<double> ccol;
    for (std::size_t j = 0; j < nv; ++j) {
        const double lo = p.lower[j], hi = p.upper[j];
        ColMap& cm = tr.cols[j];
        if (lo > hi + tol * std::max(1.0, std::abs(lo))) {
            tr.conflicts.push_back("variable " + p.var_names[j] + ": lower bound exceeds upper bound");
            cm.kind = ColMap::Fixed;
            cm.base = lo;
        } else if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-13 * std::max(1.0, std::abs(lo))) {
            cm.kind = ColMap::Fixed;
            cm.base = lo;
        } else if (std::isfinite(lo)) {
            cm.kind = ColMap::Shift;
            cm.base = lo;
            cm.col = ncol++;
            ucol.push_back(hi - lo);
            ccol.push_back(p.cost[j]);
        } else if (std::isfinite(hi)) {
            cm.kind = ColMap::Flip;
            cm.base = hi;
            cm.col = ncol++;
            ucol.push_back(kInf);
            ccol.push_back(-p.cost[j]);
        } else {
            cm.kind = ColMap::Split;
            cm.col = ncol++;
            cm.col2 = ncol++;
            ucol.push_back(kInf);
            ucol.push_back(kInf);
            ccol.push_back(p.cost[j]);
            ccol.push_back(-p.cost[j]);
        }
    }

    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> bvec;
    tr.row_index.assign(p.num_rows(), -1);
    Eigen::Index nrow = 0;
    for (std::size_t i = 0; i < p.num_rows(); ++i) {
        const LpRow& row = p.rows[i];
        double rhs = row.rhs;
        std::vector<Eigen::Triplet<double>> rt;
        for (const auto& [j, a] : row.coef) {
            if (a == 0.0) continue;
            const ColMap& cm = tr.cols[j];
            rhs -= a * cm.base;
            switch (cm.kind) {
            case ColMap::Fixed: break;
            case ColMap::Shift: rt.emplace_back(nrow, cm.col, a); break;
            case ColMap::Flip: rt.emplace_back(nrow, cm.col, -a); break;
            case ColMap::Split:
                rt.emplace_back(nrow, cm.col, a);
                rt.emplace_back(nrow, cm.col2, -a);
                break;
            }
        }
        if (rt.empty()) {
            const double t = tol * std::max(1.0, std::abs(row.rhs));
            const bool ok = row.sense == RowSense::EQ   ? std::abs(rhs) <= t
                            : row.sense == RowSense::LE ? rhs >= -t
                                                        : rhs <= t;
            if (!ok) tr.conflicts.push_back("row " + row.name + ": unsatisfiable after fixing variables");
            continue;
        }
        trip.insert(trip.end(), rt.begin(), rt.end());
        if (row.sense != RowSense::EQ) {
            trip.emplace_back(nrow, ncol++, row.sense == RowSense::LE ? 1.0 : -1.0);
            ucol.push_back(kInf);
            ccol.push_back(0.0);
        }
        bvec.push_back(rhs);
        tr.row_index[i] = nrow++;
    }
    SpMat A(nrow, ncol);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();

    // Geometric-mean equilibration of rows and columns.
    Vec rs = Vec::Ones(nrow), cs = Vec::Ones(ncol);
    for (int pass = 0; pass < 4; ++pass) {
        Vec rmax = Vec::Zero(nrow), rmin = Vec::Constant(nrow, kInf);
        for (Eigen::Index k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator itr(A, k); itr; ++itr) {
                const double a = std::abs(itr.value() * rs[itr.row()] * cs[itr.col()]);
                rmax[itr.row()] = std::max(rmax[itr.row()], a);
                rmin[itr.row()] = std::min(rmin[itr.row()], a);
            }
        for (Eigen::Index i = 0; i < nrow; ++i)
            if (rmax[i] > 0) rs[i] /= std::sqrt(rmax[i] * rmin[i]);
        Vec cmax = Vec::Zero(ncol), cmin = Vec::Constant(ncol, kInf);
        for (Eigen::Index k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator itr(A, k); itr; ++itr) {
                const double a = std::abs(itr.value() * rs[itr.row()] * cs[itr.col()]);
                cmax[itr.col()] = std::max(cmax[itr.col()], a);
                cmin[itr.col()] = std::min(cmin[itr.col()], a);
            }
        for (Eigen::Index j = 0; j < ncol; ++j)
            if (cmax[j] > 0) cs[j] /= std::sqrt(cmax[j] * cmin[j]);
    }
    for (Eigen::Index k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator itr(A, k); itr; ++itr) itr.valueRef() *= rs[itr.row()] * cs[itr.col()];

    tr.sf.A = A;
    tr.sf.b = Vec(nrow);
    for (Eigen::Index i = 0; i < nrow; ++i) tr.sf.b[i] = bvec[static_cast<std::size_t>(i)] * rs[i];
    tr.sf.c = Vec(ncol);
    tr.sf.u = Vec(ncol);
    for (Eigen::Index j = 0; j < ncol; ++j) {
        tr.sf.c[j] = ccol[static_cast<std::size_t>(j)] * cs[j];
        tr.sf.u[j] = ucol[static_cast<std::size_t>(j)] / cs[j];
    }
    tr.row_scale = rs;
    tr.col_scale = cs;
    return tr;
}

// Elastic phase 1: min sum(e+ + e-) s.t. A x + e+ - e- = b. Returns the
// standard-form rows whose elastic part stays positive.
// Looks for a recession direction d >= 0 with A d = 0 and c'd < 0 over the
// columns without an upper bound, normalized to d <= 1.
bool has_descent_ray(const StandardForm& sf, double tol) {
    std::vector<Eigen::Index> free_cols;
    for (Eigen::Index j = 0; j < sf.A.cols(); ++j)
        if (!std::isfinite(sf.u[j])) free_cols.push_back(j);
    if (free_cols.empty()) return false;
    StandardForm ray;
    const Eigen::Index k = static_cast<Eigen::Index>(free_cols.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index i = 0; i < k; ++i)
        for (SpMat::InnerIterator it(sf.A, free_cols[static_cast<std::size_t>(i)]); it; ++it)
            trip.emplace_back(it.row(), i, it.value());
    ray.A.resize(sf.A.rows(), k);
    ray.A.setFromTriplets(trip.begin(), trip.end());
    ray.b = Vec::Zero(sf.A.rows());
    ray.c.resize(k);
    ray.u = Vec::Ones(k);
    for (Eigen::Index i = 0; i < k; ++i) ray.c[i] = sf.c[free_cols[static_cast<std::size_t>(i)]];
    IpmResult r = ipm(ray, tol, 200);
    if (!r.converged && !(r.pres <= 1e3 * tol && r.dres <= 1e3 * tol)) return false;
    return ray.c.dot(r.x) < -std::sqrt(tol);
}

std::vector<Eigen::Index> phase_one(const StandardForm& sf, double tol, double& infeas) {
    const Eigen::Index m = sf.A.rows(), n = sf.A.cols();
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index k = 0; k < sf.A.outerSize(); ++k)
        for (SpMat::InnerIterator it(sf.A, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index i = 0; i < m; ++i) {
        trip.emplace_back(i, n + 2 * i, 1.0);
        trip.emplace_back(i, n + 2 * i + 1, -1.0);
    }
    StandardForm e;
    e.A = SpMat(m, n + 2 * m);
    e.A.setFromTriplets(trip.begin(), trip.end());
    e.A.makeCompressed();
    e.b = sf.b;
    e.c = Vec::Zero(n + 2 * m);
    e.c.tail(2 * m).setOnes();
    e.u = Vec::Constant(n + 2 * m, kInf);
    e.u.head(n) = sf.u;
    IpmResult r = ipm(e, 1e-9, 300);
    std::vector<Eigen::Index> rows;
    infeas = 0.0;
    if (r.x.size() == 0) return rows;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double viol = r.x[n + 2 * i] + r.x[n + 2 * i + 1];
        infeas += viol;
        if (viol > std::sqrt(tol)) rows.push_back(i);
    }
    return rows;
}

} // namespace

std::size_t LpProblem::add_var(std::string name, double lo, double hi, double c) {
    var_names.push_back(std::move(name));
    lower.push_back(lo);
    upper.push_back(hi);
    cost.push_back(c);
    return var_names.size() - 1;
}

std::size_t LpProblem::add_row(std::string name, RowSense sense, double rhs) {
    rows.push_back(LpRow{std::move(name), sense, rhs, {}});
    return rows.size() - 1;
}

void LpProblem::add_coef(std::size_t row, std::size_t var, double value) { rows[row].coef.emplace_back(var, value); }

void LpProblem::validate() const {
    const std::size_t n = num_vars();
    if (cost.size() != n || lower.size() != n || upper.size() != n)
        throw Error(ErrorKind::InvalidSpec, "LP variable arrays have inconsistent sizes");
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(cost[j])) throw Error(ErrorKind::InvalidSpec, "non-finite cost for " + var_names[j]);
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == kInf || upper[j] == -kInf)
            throw Error(ErrorKind::InvalidSpec, "unusable bounds for " + var_names[j]);
    }
    for (const auto& r : rows) {
        if (!std::isfinite(r.rhs)) throw Error(ErrorKind::InvalidSpec, "non-finite right-hand side in row " + r.name);
        for (const auto& [j, a] : r.coef) {
            if (j >= n) throw Error(ErrorKind::InvalidSpec, "row " + r.name + " references an undeclared variable");
            if (!std::isfinite(a)) throw Error(ErrorKind::InvalidSpec, "non-finite coefficient in row " + r.name);
        }
    }
}

const char* to_string(LpStatus s) {
    switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    }
    return "Unknown";
}

LpSolution solve_lp(const LpProblem& p, const LpOptions& opts) {
    p.validate();
    Transformed tr = transform(p, std::max(opts.tol, 1e-9));
    LpSolution sol;
    if (!tr.conflicts.empty()) {
        sol.status = LpStatus::Infeasible;
        sol.certificate = tr.conflicts;
        return sol;
    }
    const StandardForm& sf = tr.sf;
    IpmResult r;
    if (sf.A.rows() == 0) {
        // Only bounds remain: each column sits at whichever bound its cost prefers.
        r.converged = true;
        r.x = Vec::Zero(sf.A.cols());
        for (Eigen::Index j = 0; j < sf.A.cols(); ++j) {
            if (sf.c[j] >= 0) continue;
            if (!std::isfinite(sf.u[j])) {
                sol.status = LpStatus::Unbounded;
                return sol;
            }
            r.x[j] = sf.u[j];
        }
    } else {
        r = ipm(sf, opts.tol, opts.max_iter);
    }

    if (!r.converged) {
        double infeas = 0.0;
        auto bad_rows = sf.A.rows() > 0 ? phase_one(sf, opts.tol, infeas) : std::vector<Eigen::Index>{};
        if (!bad_rows.empty()) {
            sol.status = LpStatus::Infeasible;
            for (std::size_t i = 0; i < p.num_rows(); ++i)
                if (tr.row_index[i] >= 0 && std::find(bad_rows.begin(), bad_rows.end(), tr.row_index[i]) != bad_rows.end())
                    sol.certificate.push_back("row " + p.rows[i].name + " cannot be satisfied");
            return sol;
        }
        if ((r.diverged && r.x.size() > 0 && sf.c.dot(r.x) < -1e10) || has_descent_ray(sf, opts.tol)) {
            sol.status = LpStatus::Unbounded;
            return sol;
        }
        // Accept a nearly converged point; otherwise report the failure.
        if (!(r.pres <= 1e3 * opts.tol && r.dres <= 1e3 * opts.tol && r.gap <= 1e3 * opts.tol)) {
            if (r.diverged) {
                sol.status = LpStatus::Unbounded;
                return sol;
            }
            char buf[160];
            std::snprintf(buf, sizeof buf, "primal residual %.3g, dual residual %.3g, gap %.3g after %d iterations",
                          r.pres, r.dres, r.gap, r.iterations);
            throw Error(ErrorKind::NumericalFailure, "interior-point method did not converge", {buf});
        }
    }

    sol.status = LpStatus::Optimal;
    sol.iterations = r.iterations;
    sol.primal_residual = r.pres;
    sol.dual_residual = r.dres;
    sol.gap = r.gap;
    sol.x.resize(p.num_vars());
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
        const ColMap& cm = tr.cols[j];
        auto colval = [&](Eigen::Index c) { return r.x[c] * tr.col_scale[c]; };
        double v = cm.base;
        switch (cm.kind) {
        case ColMap::Fixed: break;
        case ColMap::Shift: v = cm.base + colval(cm.col); break;
        case ColMap::Flip: v = cm.base - colval(cm.col); break;
        case ColMap::Split: v = colval(cm.col) - colval(cm.col2); break;
        }
        sol.x[j] = std::clamp(v, p.lower[j], p.upper[j]);
    }
    sol.objective = p.objective_offset;
    for (std::size_t j = 0; j < p.num_vars(); ++j) sol.objective += p.cost[j] * sol.x[j];
    sol.row_activity.assign(p.num_rows(), 0.0);
    sol.row_dual.assign(p.num_rows(), 0.0);
    for (std::size_t i = 0; i < p.num_rows(); ++i) {
        double act = 0.0;
        for (const auto& [j, a] : p.rows[i].coef) act += a * sol.x[j];
        sol.row_activity[i] = act;
        if (tr.row_index[i] >= 0 && r.y.size() > 0) sol.row_dual[i] = r.y[tr.row_index[i]] * tr.row_scale[tr.row_index[i]];
    }
    return sol;
}

} // namespace ges
