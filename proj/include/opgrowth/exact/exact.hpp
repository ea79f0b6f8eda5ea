#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opgrowth/lattice/rng.hpp"

namespace opgrowth::exact {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// Dense operators are refused above this many sites.
constexpr std::size_t max_sites = 8;

/// Infinite-temperature grand-canonical ensemble at dimensionless chemical
/// potential mu: rho = exp(-mu Q) / (1 + exp(-mu))^N.
class MuEnsemble {
  public:
    MuEnsemble(double mu, std::size_t n_sites);

    double mu() const noexcept { return mu_; }
    std::size_t n_sites() const noexcept { return n_sites_; }
    /// 1 / (1 + e^mu).
    double density() const noexcept;
    /// Diagonal of sqrt(rho) in the occupation basis, indexed by basis state.
    const std::vector<double> &sqrt_rho() const noexcept { return sqrt_rho_; }

  private:
    double mu_;
    std::size_t n_sites_;
    std::vector<double> sqrt_rho_;
};

/// Dense 2^N x 2^N operator. Basis state x has site i occupied iff bit i is
/// set; fermion signs follow the Jordan-Wigner order of ascending sites.
struct FockOperator {
    Matrix m;
    std::size_t n_sites = 0;
    /// Change of Q produced by the operator when it is homogeneous.
    int charge_shift = 0;
};

FockOperator identity(std::size_t n_sites);
FockOperator annihilator(std::size_t n_sites, std::size_t i);
FockOperator creator(std::size_t n_sites, std::size_t i);
FockOperator number(std::size_t n_sites, std::size_t i);
FockOperator total_charge(std::size_t n_sites);

/// (A|B) = tr(sqrt(rho) A^dagger sqrt(rho) B).
cplx inner_product(const FockOperator &a, const FockOperator &b, const MuEnsemble &ens);
cplx inner_product(const Matrix &a, const Matrix &b, const MuEnsemble &ens);

/// Single-site labels of the fermionic size basis.
enum class SiteLabel : std::uint8_t { identity = 0, annihilate = 1, create = 2, density = 3 };

/// Operator string: product over ascending sites of one labelled factor per
/// site, with n - nbar for the density label.
struct SizeString {
    std::vector<SiteLabel> labels;
    std::size_t size() const noexcept;
    int charge_shift() const noexcept;
};

/// Sparse form of a string: column x maps to row `row[x]` with amplitude
/// `amp[x]` (zero when the string annihilates x).
struct StringAction {
    std::vector<std::uint32_t> row;
    std::vector<double> amp;
};

/// All 4^N strings of the fermionic size basis at density nbar.
class SizeBasis {
  public:
    SizeBasis(std::size_t n_sites, const MuEnsemble &ens);

    std::size_t n_sites() const noexcept { return n_sites_; }
    std::size_t count() const noexcept { return strings_.size(); }
    const SizeString &string(std::size_t a) const { return strings_[a]; }
    const StringAction &action(std::size_t a) const { return actions_[a]; }
    std::size_t size_of(std::size_t a) const { return sizes_[a]; }
    /// (T|T) from the product of single-site lengths.
    double length(std::size_t a) const { return lengths_[a]; }
    /// Indices of the strings of total size s.
    std::vector<std::size_t> of_size(std::size_t s) const;

    Matrix dense(std::size_t a) const;
    /// (T_a|X) in O(2^N).
    cplx project(std::size_t a, const Matrix &x) const;

    /// Single-site lengths: 1, sqrt(nbar(1-nbar)) twice, nbar(1-nbar).
    static double site_length(SiteLabel label, double nbar);

  private:
    std::size_t n_sites_;
    std::vector<double> sqrt_rho_;
    std::vector<SizeString> strings_;
    std::vector<StringAction> actions_;
    std::vector<std::size_t> sizes_;
    std::vector<double> lengths_;
};

/// Coupling draws for the q-body Hamiltonian, keyed by ordered index sets.
struct SykCouplings {
    std::size_t n_sites = 0;
    std::size_t q = 0;
    double J = 1.0;
    /// Index sets i_1 < ... < i_{q/2} in lexicographic order.
    std::vector<std::vector<std::size_t>> sets;
    /// K = i^{q/2} J as a Hermitian matrix over `sets`.
    Matrix k;
};

/// Variance of each coupling: J^2 (q/2-1)! (q/2)! / N^{q-1}.
double syk_coupling_variance(std::size_t n_sites, std::size_t q, double J);

SykCouplings draw_syk_couplings(std::size_t n_sites, std::size_t q, double J, RngStream &rng);
FockOperator syk_hamiltonian(const SykCouplings &couplings);
/// H = i^{q/2} sum J c^dagger_I c_J with Gaussian couplings. Throws for odd q
/// or q > 2 N.
FockOperator build_syk_hamiltonian(std::size_t n_sites, std::size_t q, double J, RngStream &rng);

/// Cached eigendecomposition of a Hermitian H.
class HeisenbergEvolver {
  public:
    /// Throws std::invalid_argument if H is not Hermitian.
    explicit HeisenbergEvolver(const FockOperator &h);
    /// e^{iHt} A e^{-iHt}.
    FockOperator evolve(const FockOperator &a, double t) const;
    const FockOperator &hamiltonian() const noexcept { return h_; }

  private:
    FockOperator h_;
    Eigen::VectorXd energies_;
    Matrix vectors_;
};

FockOperator heisenberg_evolve(const FockOperator &a, const FockOperator &h, double t);

struct SizeDistribution {
    std::vector<double> p;
    double total() const noexcept;
    double mean() const noexcept;
};

/// P_s = sum over size-s strings of |(T|A)|^2 / (T|T), divided by (A|A).
SizeDistribution size_distribution(const FockOperator &a, const SizeBasis &basis, const MuEnsemble &ens);

/// i[H, B].
Matrix liouvillian(const Matrix &h, const Matrix &b);

struct BlockBoundEntry {
    double mu;
    double norm;
    double norm_at_zero;
    double factor;
    double bound;
    bool violated;
};

struct BlockBoundReport {
    std::size_t s;
    std::size_t s_prime;
    std::vector<BlockBoundEntry> entries;
    std::size_t violations() const noexcept;
};

/// Largest singular value of Q_s L Q_{s'} in the unit-length size basis at mu.
double block_norm(const FockOperator &h, std::size_t s, std::size_t s_prime, double mu);

/// Compares each block norm with norm(mu=0) / sqrt(cosh^{|s-s'|}(mu/2));
/// violations are flagged beyond `rel_tol` relative.
BlockBoundReport block_bound_report(const FockOperator &h, std::size_t s, std::size_t s_prime,
                                    const std::vector<double> &mus, double rel_tol = 1e-9);

struct SumRuleReport {
    std::vector<double> c;
    double sum = 0.0;
    double size_expectation = 0.0;
    /// size_expectation - sum; non-negative when the inequality holds.
    double slack = 0.0;
};

/// C_ij(t) for every i, the mean size of c_j(t), and their difference.
SumRuleReport otoc_exact_and_sumrule(const HeisenbergEvolver &evolver, std::size_t j, double t,
                                     const MuEnsemble &ens, const SizeBasis &basis);

std::string block_report_json(const std::vector<BlockBoundReport> &reports);
/// Header: t,s,P_s
void write_size_csv(std::ostream &os, const std::vector<double> &times,
                    const std::vector<SizeDistribution> &dists);

}  // namespace opgrowth::exact
