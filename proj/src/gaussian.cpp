#include "fclt/gaussian.hpp"

#include "fclt/simd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace fclt {

Matrix psd_sqrt(const Matrix& sym) {
    auto eig = sym_eig(sym);
    const int n = sym.rows;
    double lmax = 0.0;
    for (double v : eig.values) lmax = std::max(lmax, v);
    const double floor = -1e-8 * std::max(lmax, 0.0);
    std::vector<double> sq(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double v = eig.values[static_cast<std::size_t>(i)];
        if (v < floor)
            throw NotPsdError("psd_sqrt: eigenvalue " + std::to_string(v) +
                              " below tolerance for lmax=" + std::to_string(lmax));
        if (v < 0.0) v = 0.0;
        sq[static_cast<std::size_t>(i)] = std::sqrt(v);
    }
    // S = V diag(sq) V^T with eigenvectors in columns of eig.vectors
    Matrix s(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k)
                acc += eig.vectors.at(i, k) * sq[static_cast<std::size_t>(k)] * eig.vectors.at(j, k);
            s.at(i, j) = acc;
            s.at(j, i) = acc;
        }
    }
    return s;
}

CovModel CovModel::dense(Matrix sym) {
    CovModel c;
    c.dim_ = sym.rows;
    c.dense_ = std::move(sym);
    c.materialized_ = true;
    return c;
}

CovModel CovModel::block_diagonal(std::vector<Matrix> blocks) {
    CovModel c;
    int d = 0;
    for (const auto& b : blocks) {
        if (b.rows != b.cols) throw std::invalid_argument("block_diagonal: square blocks required");
        d += b.rows;
    }
    c.dim_ = d;
    c.blocks_ = std::move(blocks);
    return c;
}

CovModel CovModel::rule_based(int dim, std::function<double(int, int)> rule) {
    CovModel c;
    c.dim_ = dim;
    c.rule_ = std::move(rule);
    return c;
}

void CovModel::materialize() const {
    if (materialized_) return;
    Matrix m(dim_, dim_);
    if (!blocks_.empty()) {
        int off = 0;
        for (const auto& b : blocks_) {
            for (int i = 0; i < b.rows; ++i)
                for (int j = 0; j < b.cols; ++j) m.at(off + i, off + j) = b.at(i, j);
            off += b.rows;
        }
    } else if (rule_) {
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) m.at(i, j) = rule_(i, j);
    }
    dense_ = std::move(m);
    materialized_ = true;
}

double CovModel::at(int i, int j) const {
    if (!materialized_ && rule_) return rule_(i, j);
    if (!materialized_) materialize();
    return dense_.at(i, j);
}

Matrix CovModel::to_dense() const {
    materialize();
    return dense_;
}

void CovModel::validate() const {
    materialize();
    double scale = 1e-10;
    for (int i = 0; i < dim_; ++i)
        for (int j = i + 1; j < dim_; ++j)
            if (std::fabs(dense_.at(i, j) - dense_.at(j, i)) > scale)
                throw std::invalid_argument("CovModel: not symmetric within 1e-10");
    (void)sqrt();  // PSD check happens inside psd_sqrt
}

const Matrix& CovModel::sqrt() const {
    if (sqrt_) return *sqrt_;
    if (!blocks_.empty()) {
        // blockwise square root assembled into a dense matrix
        Matrix s(dim_, dim_);
        int off = 0;
        for (const auto& b : blocks_) {
            Matrix bs = psd_sqrt(b);
            for (int i = 0; i < b.rows; ++i)
                for (int j = 0; j < b.cols; ++j) s.at(off + i, off + j) = bs.at(i, j);
            off += b.rows;
        }
        sqrt_ = std::make_shared<Matrix>(std::move(s));
    } else {
        materialize();
        sqrt_ = std::make_shared<Matrix>(psd_sqrt(dense_));
    }
    return *sqrt_;
}

long long index_bijection(int k, const std::vector<int>& idx, int n, int m, int d) {
    if (k < 1 || k > d) throw std::out_of_range("index_bijection: k outside [1,d]");
    if (static_cast<int>(idx.size()) != m) throw std::invalid_argument("index_bijection: arity");
    long long acc = k - 1;
    for (int j = 0; j < m; ++j) {
        if (idx[static_cast<std::size_t>(j)] < 1 || idx[static_cast<std::size_t>(j)] > n)
            throw std::out_of_range("index_bijection: i_j outside [1,n]");
        acc = acc * n + (idx[static_cast<std::size_t>(j)] - 1);
    }
    return acc + 1;
}

PathSampler build_prelimit_ustat(const UProcessSpec& spec) {
    struct SubsetRec {
        int max_index;
        std::vector<double> weights;  // one per component in the order group
    };
    struct Group {
        std::vector<int> comps;   // component indices sharing order q
        Matrix sqrt_cross;        // PSD sqrt of the cross-moment matrix
        std::vector<SubsetRec> subsets;
    };

    auto groups = std::make_shared<std::vector<Group>>();

    int i = 0;
    while (i < spec.d) {
        int j = i;
        const int q = spec.comp[static_cast<std::size_t>(i)].psi.p;
        while (j < spec.d && spec.comp[static_cast<std::size_t>(j)].psi.p == q) ++j;
        Group g;
        for (int c = i; c < j; ++c) g.comps.push_back(c);
        const int dq = static_cast<int>(g.comps.size());

        Matrix cross(dq, dq);
        for (int a = 0; a < dq; ++a)
            for (int b = a; b < dq; ++b) {
                const double m2 = cross_moment(spec.comp[static_cast<std::size_t>(g.comps[a])].psi,
                                               spec.comp[static_cast<std::size_t>(g.comps[b])].psi);
                cross.at(a, b) = m2;
                cross.at(b, a) = m2;
            }
        g.sqrt_cross = psd_sqrt(cross);  // throws NotPsdError if the moment matrix is not PSD

        // union of subsets across the group's weight arrays, sorted
        std::map<std::vector<std::int32_t>, std::vector<double>> merged;
        for (int a = 0; a < dq; ++a) {
            const auto& w = spec.comp[static_cast<std::size_t>(g.comps[a])].weights;
            for (std::size_t k = 0; k < w.count(); ++k) {
                std::vector<std::int32_t> key(w.subset(k), w.subset(k) + q);
                auto& slot = merged[key];
                if (slot.empty()) slot.assign(static_cast<std::size_t>(dq), 0.0);
                slot[static_cast<std::size_t>(a)] = w.weight(k);
            }
        }
        for (auto& [key, ws] : merged) g.subsets.push_back({key.back(), std::move(ws)});
        groups->push_back(std::move(g));
        i = j;
    }

    std::vector<double> inv_sigma(static_cast<std::size_t>(spec.d));
    for (int c = 0; c < spec.d; ++c) inv_sigma[static_cast<std::size_t>(c)] = 1.0 / spec.comp[static_cast<std::size_t>(c)].sigma;

    PathSampler s;
    s.d = spec.d;
    s.n = spec.n;
    s.draw = [groups, d = spec.d, n = spec.n, inv_sigma](Rng& rng) {
        StepPath path(d, n);
        std::vector<double> bucket(static_cast<std::size_t>(n + 1) * d, 0.0);
        std::vector<double> xi, z;
        for (const auto& g : *groups) {
            const int dq = static_cast<int>(g.comps.size());
            xi.resize(static_cast<std::size_t>(dq));
            z.resize(static_cast<std::size_t>(dq));
            for (const auto& rec : g.subsets) {
                for (auto& v : xi) v = rng.normal();
                vec::matvec(g.sqrt_cross.a.data(), xi.data(), z.data(),
                            static_cast<std::size_t>(dq), static_cast<std::size_t>(dq));
                double* brow = bucket.data() + static_cast<std::size_t>(rec.max_index) * d;
                for (int a = 0; a < dq; ++a)
                    brow[g.comps[static_cast<std::size_t>(a)]] +=
                        rec.weights[static_cast<std::size_t>(a)] * z[static_cast<std::size_t>(a)];
            }
        }
        std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
        for (int m = 0; m <= n; ++m) {
            const double* brow = bucket.data() + static_cast<std::size_t>(m) * d;
            double* prow = path.row(m);
            for (int c = 0; c < d; ++c) {
                acc[static_cast<std::size_t>(c)] += brow[c];
                prow[c] = inv_sigma[static_cast<std::size_t>(c)] * acc[static_cast<std::size_t>(c)];
            }
        }
        return path;
    };
    return s;
}

const Matrix& PiecewiseMatrix::value_at(double s) const {
    for (std::size_t c = 0; c < breaks.size(); ++c)
        if (s <= breaks[c] + 1e-15) return mats[c];
    return mats.back();
}

PiecewiseMatrix PiecewiseMatrix::constant(Matrix m) {
    PiecewiseMatrix pm;
    pm.breaks = {1.0};
    pm.mats.push_back(std::move(m));
    return pm;
}

PathSampler sample_Z_grid(const PiecewiseMatrix& phi, int grid_n) {
    if (phi.mats.empty()) throw std::invalid_argument("sample_Z_grid: empty phi");
    const int d = phi.dim();
    // alignment: every breakpoint must sit on the grid
    for (double b : phi.breaks) {
        const double g = b * grid_n;
        if (std::fabs(g - std::nearbyint(g)) > 1e-12)
            throw std::invalid_argument(
                "sample_Z_grid: phi partition not aligned with the grid; refuse (choose grid = lcm refinement)");
    }
    if (std::fabs(phi.breaks.back() - 1.0) > 1e-12)
        throw std::invalid_argument("sample_Z_grid: phi partition must end at 1");

    // per-cell piece index into a retained copy of phi
    auto phi_copy = std::make_shared<PiecewiseMatrix>(phi);
    auto cell_piece = std::make_shared<std::vector<std::size_t>>();
    {
        std::size_t c = 0;
        for (int m = 1; m <= grid_n; ++m) {
            const double mid = (m - 0.5) / grid_n;
            while (c + 1 < phi_copy->breaks.size() && mid > phi_copy->breaks[c]) ++c;
            cell_piece->push_back(c);
        }
    }

    PathSampler s;
    s.d = d;
    s.n = grid_n;
    s.draw = [cell_piece, phi_copy, d, grid_n](Rng& rng) {
        StepPath path(d, grid_n);
        const double sdt = std::sqrt(1.0 / grid_n);
        std::vector<double> dw(static_cast<std::size_t>(d)), dz(static_cast<std::size_t>(d));
        std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
        for (int m = 1; m <= grid_n; ++m) {
            for (auto& v : dw) v = sdt * rng.normal();
            const Matrix& mat = phi_copy->mats[(*cell_piece)[static_cast<std::size_t>(m - 1)]];
            vec::matvec(mat.a.data(), dw.data(), dz.data(), static_cast<std::size_t>(d),
                        static_cast<std::size_t>(d));
            double* row = path.row(m);
            for (int c = 0; c < d; ++c) {
                acc[static_cast<std::size_t>(c)] += dz[static_cast<std::size_t>(c)];
                row[c] = acc[static_cast<std::size_t>(c)];
            }
        }
        return path;
    };
    return s;
}

PathSampler toy_dn_sampler(const ToyDnSpec& spec) {
    long long total = spec.d;
    for (int j = 0; j < spec.m; ++j) total *= spec.n;
    if (total > 4096) throw std::invalid_argument("toy_dn_sampler: d*n^m exceeds 4096");
    if (static_cast<long long>(spec.indicator.size()) != total)
        throw std::invalid_argument("toy_dn_sampler: indicator arity");
    auto sqrt_sigma = std::make_shared<Matrix>(spec.sigma.sqrt());
    auto indicator = std::make_shared<std::vector<std::vector<std::pair<int, int>>>>(spec.indicator);
    long long per_comp = total / spec.d;

    PathSampler s;
    s.d = spec.d;
    s.n = spec.n;
    s.draw = [sqrt_sigma, indicator, d = spec.d, n = spec.n, per_comp, total](Rng& rng) {
        std::vector<double> xi(static_cast<std::size_t>(total)), z(static_cast<std::size_t>(total));
        for (auto& v : xi) v = rng.normal();
        vec::matvec(sqrt_sigma->a.data(), xi.data(), z.data(), static_cast<std::size_t>(total),
                    static_cast<std::size_t>(total));
        StepPath path(d, n);
        for (long long flat = 0; flat < total; ++flat) {
            const int k = static_cast<int>(flat / per_comp);
            for (const auto& [a, b] : (*indicator)[static_cast<std::size_t>(flat)]) {
                for (int g = a; g < b && g <= n; ++g) path.row(g)[k] += z[static_cast<std::size_t>(flat)];
            }
        }
        return path;
    };
    return s;
}

void write_matrix_csv(const Matrix& m, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file);
    os.precision(17);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) os << (j ? "," : "") << m.at(i, j);
        os << "\n";
    }
}

}  // namespace fclt
