#include "opgrowth/exact/exact.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace opgrowth::exact {

namespace {

void check_sites(std::size_t n_sites) {
    if (n_sites == 0 || n_sites > max_sites) {
        throw std::invalid_argument("exact operators support 1 <= N <= " + std::to_string(max_sites) + ", got " +
                                    std::to_string(n_sites));
    }
}

std::size_t dim(std::size_t n_sites) { return std::size_t{1} << n_sites; }

/// Applies c_i (create = false) or c_i^dagger to basis state `x` in place.
/// Returns 0 if the state is annihilated, otherwise the Jordan-Wigner sign.
int apply_fermion(std::uint32_t &x, std::size_t i, bool create) {
    const std::uint32_t bit = std::uint32_t{1} << i;
    if (((x & bit) != 0) == create) {
        return 0;
    }
    const int sign = (std::popcount(x & (bit - 1)) & 1) ? -1 : 1;
    x ^= bit;
    return sign;
}

FockOperator single_fermion(std::size_t n_sites, std::size_t i, bool create) {
    check_sites(n_sites);
    if (i >= n_sites) {
        throw std::out_of_range("site " + std::to_string(i) + " out of range");
    }
    FockOperator op{Matrix::Zero(dim(n_sites), dim(n_sites)), n_sites, create ? 1 : -1};
    for (std::uint32_t x = 0; x < dim(n_sites); ++x) {
        std::uint32_t y = x;
        int s = apply_fermion(y, i, create);
        if (s != 0) {
            op.m(y, x) = s;
        }
    }
    return op;
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double factorial(std::size_t n) {
    double f = 1.0;
    for (std::size_t i = 2; i <= n; ++i) {
        f *= static_cast<double>(i);
    }
    return f;
}

void combinations(std::size_t n, std::size_t r, std::size_t start, std::vector<std::size_t> &cur,
                  std::vector<std::vector<std::size_t>> &out) {
    if (cur.size() == r) {
        out.push_back(cur);
        return;
    }
    for (std::size_t i = start; i < n; ++i) {
        cur.push_back(i);
        combinations(n, r, i + 1, cur, out);
        cur.pop_back();
    }
}

}  // namespace

MuEnsemble::MuEnsemble(double mu, std::size_t n_sites) : mu_(mu), n_sites_(n_sites) {
    check_sites(n_sites);
    if (!std::isfinite(mu)) {
        throw std::invalid_argument("chemical potential must be finite");
    }
    // log sqrt(rho_x) = -mu Q / 2 - (N / 2) log(1 + e^{-mu}).
    const double log_norm = mu >= 0 ? std::log1p(std::exp(-mu)) : -mu + std::log1p(std::exp(mu));
    sqrt_rho_.resize(dim(n_sites));
    for (std::uint32_t x = 0; x < dim(n_sites); ++x) {
        double q = std::popcount(x);
        sqrt_rho_[x] = std::exp(-0.5 * mu * q - 0.5 * static_cast<double>(n_sites) * log_norm);
    }
}

double MuEnsemble::density() const noexcept { return 1.0 / (1.0 + std::exp(mu_)); }

FockOperator identity(std::size_t n_sites) {
    check_sites(n_sites);
    return {Matrix::Identity(dim(n_sites), dim(n_sites)), n_sites, 0};
}

FockOperator annihilator(std::size_t n_sites, std::size_t i) { return single_fermion(n_sites, i, false); }
FockOperator creator(std::size_t n_sites, std::size_t i) { return single_fermion(n_sites, i, true); }

FockOperator number(std::size_t n_sites, std::size_t i) {
    check_sites(n_sites);
    if (i >= n_sites) {
        throw std::out_of_range("site " + std::to_string(i) + " out of range");
    }
    FockOperator op{Matrix::Zero(dim(n_sites), dim(n_sites)), n_sites, 0};
    for (std::uint32_t x = 0; x < dim(n_sites); ++x) {
        op.m(x, x) = (x >> i) & 1u;
    }
    return op;
}

FockOperator total_charge(std::size_t n_sites) {
    check_sites(n_sites);
    FockOperator op{Matrix::Zero(dim(n_sites), dim(n_sites)), n_sites, 0};
    for (std::uint32_t x = 0; x < dim(n_sites); ++x) {
        op.m(x, x) = std::popcount(x);
    }
    return op;
}

cplx inner_product(const Matrix &a, const Matrix &b, const MuEnsemble &ens) {
    const auto d = static_cast<Eigen::Index>(ens.sqrt_rho().size());
    if (a.rows() != d || a.cols() != d || b.rows() != d || b.cols() != d) {
        throw std::invalid_argument("inner_product: dimension mismatch");
    }
    const auto &w = ens.sqrt_rho();
    cplx total = 0.0;
    for (Eigen::Index x = 0; x < d; ++x) {
        for (Eigen::Index y = 0; y < d; ++y) {
            total += w[static_cast<std::size_t>(x)] * w[static_cast<std::size_t>(y)] * std::conj(a(y, x)) * b(y, x);
        }
    }
    return total;
}

cplx inner_product(const FockOperator &a, const FockOperator &b, const MuEnsemble &ens) {
    return inner_product(a.m, b.m, ens);
}

std::size_t SizeString::size() const noexcept {
    std::size_t s = 0;
    for (auto l : labels) {
        s += l == SiteLabel::identity ? 0 : (l == SiteLabel::density ? 2 : 1);
    }
    return s;
}

int SizeString::charge_shift() const noexcept {
    int q = 0;
    for (auto l : labels) {
        q += l == SiteLabel::create ? 1 : (l == SiteLabel::annihilate ? -1 : 0);
    }
    return q;
}

double SizeBasis::site_length(SiteLabel label, double nbar) {
    switch (label) {
    case SiteLabel::identity:
        return 1.0;
    case SiteLabel::annihilate:
    case SiteLabel::create:
        return std::sqrt(nbar * (1.0 - nbar));
    case SiteLabel::density:
        return nbar * (1.0 - nbar);
    }
    return 0.0;
}

SizeBasis::SizeBasis(std::size_t n_sites, const MuEnsemble &ens) : n_sites_(n_sites), sqrt_rho_(ens.sqrt_rho()) {
    check_sites(n_sites);
    if (ens.n_sites() != n_sites) {
        throw std::invalid_argument("SizeBasis: ensemble size mismatch");
    }
    const double nbar = ens.density();
    const std::size_t count = std::size_t{1} << (2 * n_sites);
    const std::size_t d = dim(n_sites);
    strings_.resize(count);
    actions_.resize(count);
    sizes_.resize(count);
    lengths_.resize(count);
    for (std::size_t a = 0; a < count; ++a) {
        SizeString str;
        str.labels.resize(n_sites);
        double len = 1.0;
        for (std::size_t i = 0; i < n_sites; ++i) {
            str.labels[i] = static_cast<SiteLabel>((a >> (2 * i)) & 3u);
            len *= site_length(str.labels[i], nbar);
        }
        StringAction act;
        act.row.resize(d);
        act.amp.resize(d);
        for (std::uint32_t x = 0; x < d; ++x) {
            // Factors act right to left: the highest site first.
            std::uint32_t cur = x;
            double amp = 1.0;
            for (std::size_t i = n_sites; i-- > 0 && amp != 0.0;) {
                switch (str.labels[i]) {
                case SiteLabel::identity:
                    break;
                case SiteLabel::annihilate:
                    amp *= apply_fermion(cur, i, false);
                    break;
                case SiteLabel::create:
                    amp *= apply_fermion(cur, i, true);
                    break;
                case SiteLabel::density:
                    amp *= ((cur >> i) & 1u) ? 1.0 - nbar : -nbar;
                    break;
                }
            }
            act.row[x] = cur;
            act.amp[x] = amp;
        }
        sizes_[a] = str.size();
        lengths_[a] = len;
        strings_[a] = std::move(str);
        actions_[a] = std::move(act);
    }
}

std::vector<std::size_t> SizeBasis::of_size(std::size_t s) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < sizes_.size(); ++a) {
        if (sizes_[a] == s) {
            out.push_back(a);
        }
    }
    return out;
}

Matrix SizeBasis::dense(std::size_t a) const {
    const std::size_t d = dim(n_sites_);
    Matrix m = Matrix::Zero(d, d);
    const auto &act = actions_[a];
    for (std::size_t x = 0; x < d; ++x) {
        if (act.amp[x] != 0.0) {
            m(act.row[x], x) = act.amp[x];
        }
    }
    return m;
}

cplx SizeBasis::project(std::size_t a, const Matrix &x) const {
    const auto &act = actions_[a];
    cplx total = 0.0;
    for (std::size_t col = 0; col < act.row.size(); ++col) {
        if (act.amp[col] != 0.0) {
            std::size_t r = act.row[col];
            total += sqrt_rho_[col] * sqrt_rho_[r] * act.amp[col] * x(static_cast<Eigen::Index>(r),
                                                                         static_cast<Eigen::Index>(col));
        }
    }
    return total;
}

double syk_coupling_variance(std::size_t n_sites, std::size_t q, double J) {
    const std::size_t h = q / 2;
    return J * J * factorial(h - 1) * factorial(h) / std::pow(static_cast<double>(n_sites), static_cast<double>(q - 1));
}

SykCouplings draw_syk_couplings(std::size_t n_sites, std::size_t q, double J, RngStream &rng) {
    check_sites(n_sites);
    if (q < 2 || q % 2 != 0) {
        throw std::invalid_argument("q must be even, got " + std::to_string(q));
    }
    if (q > 2 * n_sites) {
        throw std::invalid_argument("q exceeds 2N");
    }
    if (!(J > 0)) {
        throw std::invalid_argument("J must be positive");
    }
    SykCouplings out;
    out.n_sites = n_sites;
    out.q = q;
    out.J = J;
    std::vector<std::size_t> cur;
    combinations(n_sites, q / 2, 0, cur, out.sets);
    const auto m = static_cast<Eigen::Index>(out.sets.size());
    const double sigma = std::sqrt(syk_coupling_variance(n_sites, q, J));
    std::normal_distribution<double> normal(0.0, 1.0);
    out.k = Matrix::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        out.k(a, a) = sigma * normal(rng);
        for (Eigen::Index b = a + 1; b < m; ++b) {
            double re = normal(rng);
            double im = normal(rng);
            out.k(a, b) = sigma * cplx(re, im) / std::sqrt(2.0);
            out.k(b, a) = std::conj(out.k(a, b));
        }
    }
    return out;
}

FockOperator syk_hamiltonian(const SykCouplings &c) {
    const std::size_t d = dim(c.n_sites);
    FockOperator h{Matrix::Zero(d, d), c.n_sites, 0};
    const std::size_t m = c.sets.size();
    for (std::uint32_t x = 0; x < d; ++x) {
        for (std::size_t b = 0; b < m; ++b) {
            // c_{j_1} ... c_{j_m}: rightmost factor first.
            std::uint32_t mid = x;
            int sb = 1;
            for (std::size_t p = c.sets[b].size(); p-- > 0 && sb != 0;) {
                sb *= apply_fermion(mid, c.sets[b][p], false);
            }
            if (sb == 0) {
                continue;
            }
            for (std::size_t a = 0; a < m; ++a) {
                std::uint32_t y = mid;
                int sa = sb;
                for (std::size_t p = c.sets[a].size(); p-- > 0 && sa != 0;) {
                    sa *= apply_fermion(y, c.sets[a][p], true);
                }
                if (sa != 0) {
                    h.m(y, x) += static_cast<double>(sa) *
                                 c.k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                }
            }
        }
    }
    return h;
}

FockOperator build_syk_hamiltonian(std::size_t n_sites, std::size_t q, double J, RngStream &rng) {
    return syk_hamiltonian(draw_syk_couplings(n_sites, q, J, rng));
}

HeisenbergEvolver::HeisenbergEvolver(const FockOperator &h) : h_(h) {
    const double scale = std::max(1.0, h.m.norm());
    if ((h.m - h.m.adjoint()).norm() > 1e-12 * scale) {
        throw std::invalid_argument("Hamiltonian is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h.m);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigendecomposition failed");
    }
    energies_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();
}

FockOperator HeisenbergEvolver::evolve(const FockOperator &a, double t) const {
    if (a.m.rows() != h_.m.rows() || a.m.cols() != h_.m.cols()) {
        throw std::invalid_argument("evolve: dimension mismatch");
    }
    const auto d = energies_.size();
    Eigen::VectorXcd phase(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        phase(k) = std::exp(cplx(0.0, energies_(k) * t));
    }
    // In the eigenbasis, A_kl -> e^{i(E_k - E_l)t} A_kl.
    Matrix in_eig = vectors_.adjoint() * a.m * vectors_;
    Matrix rotated = phase.asDiagonal() * in_eig * phase.conjugate().asDiagonal();
    return {vectors_ * rotated * vectors_.adjoint(), a.n_sites, a.charge_shift};
}

FockOperator heisenberg_evolve(const FockOperator &a, const FockOperator &h, double t) {
    return HeisenbergEvolver(h).evolve(a, t);
}

double SizeDistribution::total() const noexcept {
    double s = 0.0;
    for (double x : p) {
        s += x;
    }
    return s;
}

double SizeDistribution::mean() const noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        s += static_cast<double>(k) * p[k];
    }
    return s;
}

SizeDistribution size_distribution(const FockOperator &a, const SizeBasis &basis, const MuEnsemble &ens) {
    if (a.n_sites != basis.n_sites()) {
        throw std::invalid_argument("size_distribution: operator and basis sizes differ");
    }
    const double norm = inner_product(a, a, ens).real();
    if (!(norm > 0)) {
        throw std::domain_error("size_distribution: operator has zero length");
    }
    SizeDistribution out;
    out.p.assign(2 * basis.n_sites() + 1, 0.0);
    for (std::size_t k = 0; k < basis.count(); ++k) {
        cplx overlap = basis.project(k, a.m);
        out.p[basis.size_of(k)] += std::norm(overlap) / basis.length(k);
    }
    for (double &x : out.p) {
        x /= norm;
    }
    return out;
}

Matrix liouvillian(const Matrix &h, const Matrix &b) { return cplx(0.0, 1.0) * (h * b - b * h); }

std::size_t BlockBoundReport::violations() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const BlockBoundEntry &e) { return e.violated; }));
}

double block_norm(const FockOperator &h, std::size_t s, std::size_t s_prime, double mu) {
    MuEnsemble ens(mu, h.n_sites);
    SizeBasis basis(h.n_sites, ens);
    auto rows = basis.of_size(s);
    auto cols = basis.of_size(s_prime);
    if (rows.empty() || cols.empty()) {
        throw std::invalid_argument("block_norm: empty size block (" + std::to_string(s) + ", " +
                                    std::to_string(s_prime) + ")");
    }
    const auto d = static_cast<Eigen::Index>(dim(h.n_sites));
    Matrix block(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    Matrix lb(d, d);
    for (std::size_t cb = 0; cb < cols.size(); ++cb) {
        const std::size_t b = cols[cb];
        const auto &act = basis.action(b);
        // L T_b = i (H T_b - T_b H) with T_b holding one entry per column.
        lb.setZero();
        for (Eigen::Index x = 0; x < d; ++x) {
            double amp = act.amp[static_cast<std::size_t>(x)];
            if (amp == 0.0) {
                continue;
            }
            auto y = static_cast<Eigen::Index>(act.row[static_cast<std::size_t>(x)]);
            lb.col(x) += amp * h.m.col(y);
            lb.row(y) -= amp * h.m.row(x);
        }
        lb *= cplx(0.0, 1.0);
        const double norm_b = std::sqrt(basis.length(b));
        for (std::size_t ra = 0; ra < rows.size(); ++ra) {
            const std::size_t a = rows[ra];
            block(static_cast<Eigen::Index>(ra), static_cast<Eigen::Index>(cb)) =
                basis.project(a, lb) / (std::sqrt(basis.length(a)) * norm_b);
        }
    }
    Eigen::BDCSVD<Matrix> svd(block);
    return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

BlockBoundReport block_bound_report(const FockOperator &h, std::size_t s, std::size_t s_prime,
                                    const std::vector<double> &mus, double rel_tol) {
    BlockBoundReport report{s, s_prime, {}};
    const double norm0 = block_norm(h, s, s_prime, 0.0);
    const double gap = s > s_prime ? static_cast<double>(s - s_prime) : static_cast<double>(s_prime - s);
    for (double mu : mus) {
        BlockBoundEntry e{};
        e.mu = mu;
        e.norm = mu == 0.0 ? norm0 : block_norm(h, s, s_prime, mu);
        e.norm_at_zero = norm0;
        e.factor = 1.0 / std::sqrt(std::pow(std::cosh(mu / 2.0), gap));
        e.bound = norm0 * e.factor;
        e.violated = e.norm > e.bound * (1.0 + rel_tol);
        report.entries.push_back(e);
    }
    return report;
}

SumRuleReport otoc_exact_and_sumrule(const HeisenbergEvolver &evolver, std::size_t j, double t,
                                     const MuEnsemble &ens, const SizeBasis &basis) {
    const std::size_t n = evolver.hamiltonian().n_sites;
    if (j >= n) {
        throw std::out_of_range("otoc_exact_and_sumrule: site out of range");
    }
    FockOperator cj = annihilator(n, j);
    FockOperator cjt = evolver.evolve(cj, t);
    const double norm = inner_product(cj, cj, ens).real();
    SumRuleReport out;
    for (std::size_t i = 0; i < n; ++i) {
        FockOperator ni = number(n, i);
        Matrix comm = ni.m * cjt.m - cjt.m * ni.m;
        double c = inner_product(comm, comm, ens).real() / norm;
        out.c.push_back(c);
        out.sum += c;
    }
    out.size_expectation = size_distribution(cjt, basis, ens).mean();
    out.slack = out.size_expectation - out.sum;
    return out;
}

std::string block_report_json(const std::vector<BlockBoundReport> &reports) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto &r : reports) {
        nlohmann::ordered_json jr;
        jr["s"] = r.s;
        jr["s_prime"] = r.s_prime;
        jr["violations"] = r.violations();
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (const auto &e : r.entries) {
            entries.push_back({{"mu", e.mu},
                               {"norm", e.norm},
                               {"norm_at_zero", e.norm_at_zero},
                               {"factor", e.factor},
                               {"bound", e.bound},
                               {"ratio", e.bound > 0 ? e.norm / e.bound : 0.0},
                               {"violated", e.violated}});
        }
        jr["entries"] = entries;
        arr.push_back(jr);
    }
    return arr.dump(2);
}

void write_size_csv(std::ostream &os, const std::vector<double> &times, const std::vector<SizeDistribution> &dists) {
    if (times.size() != dists.size()) {
        throw std::invalid_argument("write_size_csv: times and distributions differ in length");
    }
    os << "t,s,P_s\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t s = 0; s < dists[k].p.size(); ++s) {
            os << format_double(times[k]) << ',' << s << ',' << format_double(dists[k].p[s]) << '\n';
        }
    }
}

}  // namespace opgrowth::exact
