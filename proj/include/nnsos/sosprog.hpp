#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nnsos/poly.hpp"
#include "nnsos/sdp.hpp"

namespace nnsos {

// Column of the lowered SDP: either a free scalar or one entry of a Gram
// block (used to parameterize SOS multipliers without extra rows).
using ColId = std::int64_t;
constexpr ColId kEntryBase = ColId(1) << 32;

// Affine expression in decision columns: constant + sum coef * column.
struct AffExpr {
  double constant = 0.0;
  std::vector<std::pair<ColId, double>> linear;  // sorted by column

  static AffExpr of(double c) { return {c, {}}; }
  static AffExpr col(ColId id, double coef = 1.0) { return {0.0, {{id, coef}}}; }
  bool is_structural_zero() const { return constant == 0.0 && linear.empty(); }
  void add(const AffExpr& other, double scale = 1.0);
  void scale(double s);
};

// Polynomial whose coefficients are affine in decision columns.
class LinPoly {
 public:
  using TermMap = std::map<Monomial, AffExpr, GrlexGreater>;

  LinPoly() = default;
  static LinPoly from(const Polynomial& p);

  const TermMap& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  void add_term(const Monomial& m, const AffExpr& aff, double scale = 1.0);
  LinPoly& operator+=(const LinPoly& other);
  LinPoly& operator-=(const LinPoly& other);
  LinPoly& operator*=(double s);
  LinPoly operator*(const Polynomial& p) const;
  LinPoly differentiate(VarId v) const;
  void prune();  // drop structural zeros and tiny pure constants

  std::vector<Monomial> support() const;
  std::vector<VarId> variables() const;

 private:
  TermMap terms_;
};

// All monomials over `vars` with min_deg <= total degree <= max_deg,
// grlex-ascending. The workhorse for bases of V, multipliers and Gram blocks.
std::vector<Monomial> monomials_up_to(std::span<const VarId> vars, int max_deg,
                                      int min_deg = 0);

// Gram basis for an SOS constraint with the given support: half-degree
// enumeration pruned to the support's half bounding box, then iteratively
// reduced by diagonal consistency (a basis monomial whose square can neither
// hit the support nor pair against other basis monomials cannot appear).
std::vector<Monomial> gram_basis_for(std::span<const Monomial> support,
                                     std::span<const VarId> vars);

struct SosSolution {
  bool accepted = false;
  std::string reject_reason;
  SolveStatus status = SolveStatus::Stalled;
  int iterations = 0;
  std::map<std::string, Polynomial> polynomials;
  std::map<std::string, Mat> gram;  // per SOS constraint and SOS poly
  Vec free_values;
  double objective = 0.0;
  double max_recon_residual = 0.0;
  double min_gram_eig = 0.0;
};

// Declarative SOS feasibility/optimization program lowered to an SdpProblem.
class SosProgram {
 public:
  ColId new_free_var(const std::string& name);
  // Free polynomial: one decision coefficient per basis monomial.
  LinPoly new_free_poly(std::span<const Monomial> basis,
                        const std::string& name);
  // SOS-constrained polynomial parameterized directly by a PSD Gram block:
  // p = b^T Q b, so SOS-ness costs no extra rows.
  LinPoly new_sos_poly(std::span<const Monomial> basis,
                       const std::string& name);

  // expr must equal b^T Q b for a fresh PSD Q over the (auto or explicit)
  // Gram basis. Throws Error on an uncoverable support monomial.
  int add_sos_constraint(const LinPoly& expr, const std::string& name);
  int add_sos_constraint(const LinPoly& expr, std::vector<Monomial> basis,
                         const std::string& name);
  // Every coefficient of expr must vanish.
  void add_zero_constraint(const LinPoly& expr, const std::string& name);

  void maximize(const AffExpr& objective);

  SdpProblem lower() const;

  // Rebuilds named polynomials and Gram matrices from a solver result and
  // checks them: Gram expansion must match each constraint expression within
  // recon_tol and Gram blocks must be PSD within psd_tol.
  SosSolution reconstruct(const ConicSolution& sol, double psd_tol = 1e-6,
                          double recon_tol = 1e-6) const;

  int num_blocks() const { return static_cast<int>(block_dims_.size()); }
  int num_free() const { return static_cast<int>(free_names_.size()); }
  const std::vector<Monomial>& constraint_basis(int id) const {
    return constraints_[id].basis;
  }
  int constraint_block(int id) const { return constraints_[id].block; }
  const std::string& free_name(int v) const { return free_names_[v]; }

  double eval_aff(const AffExpr& a, const ConicSolution& sol) const;
  Polynomial eval_poly(const LinPoly& p, const ConicSolution& sol) const;

 private:
  struct GramEntry {
    int block, i, j;
  };
  struct NamedPoly {
    std::string name;
    LinPoly poly;
    int block = -1;  // owning Gram block for SOS polys
  };
  struct Constraint {
    std::string name;
    LinPoly expr;
    std::vector<Monomial> basis;
    int block = -1;  // -1 when the expression is structurally zero
  };

  int add_block(int dim);
  ColId entry_col(int block, int i, int j);

  std::vector<int> block_dims_;
  std::vector<GramEntry> entries_;
  std::vector<std::string> free_names_;
  std::vector<NamedPoly> named_;
  std::vector<Constraint> constraints_;
  std::vector<std::string> zero_names_;
  std::vector<LinPoly> zeros_;
  AffExpr objective_;
  bool has_objective_ = false;
};

}  // namespace nnsos
