#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nnsos/nn.hpp"
#include "nnsos/poly.hpp"

namespace nnsos {

enum class ConstraintTag {
  ReluSign,
  ReluComplementarity,
  IbpBox,
  TanhSector,
  Slope,
  Region,
  Saturation,
  RecastSector,
  Robustness,
  AffineLayer,
};

const char* to_string(ConstraintTag t);

struct TaggedPoly {
  Polynomial p;
  ConstraintTag tag;
  std::string label;
};

// Eq-style semialgebraic description: inequalities g_i >= 0, equalities
// h_j = 0, and region polynomials d_k >= 0 kept separate because they get
// their own multiplier class.
struct SemialgebraicSet {
  std::vector<TaggedPoly> inequalities;
  std::vector<TaggedPoly> equalities;
  std::vector<TaggedPoly> region;

  void append(SemialgebraicSet&& other);
  std::size_t count(ConstraintTag t) const;
};

// Variables allocated for one abstraction instance: pre-activation v, post-
// activation phi per hidden node, and the network output u.
struct NetVars {
  std::vector<std::vector<VarId>> pre;
  std::vector<std::vector<VarId>> post;
  std::vector<VarId> u;

  // u_vars, when given, are the problem's declared input variables; otherwise
  // u1, u2, ... are interned.
  static NetVars create(VariableSpace& space, const NeuralNetwork& nn,
                        std::span<const VarId> u_vars = {});
  std::vector<VarId> all_post() const;
  std::vector<VarId> all_pre() const;
};

// v^k = W^k x^k + b^k for every hidden layer plus the affine output row(s).
SemialgebraicSet affine_layer_equalities(const NeuralNetwork& nn,
                                         const NetVars& vars,
                                         std::span<const VarId> z_vars);

// Per ReLU node: phi >= 0, phi - v >= 0, phi(phi - v) = 0, and the IBP box on
// phi. A node whose interval collapses to {0} gets the equality phi = 0
// instead of the box. Pass bounds = nullptr for global (box-free) validity.
SemialgebraicSet relu_constraints(const NeuralNetwork& nn,
                                  const IbpBounds* bounds, const NetVars& vars);

// Per tanh node: (phi - alpha v)(v - phi) >= 0 with alpha the smaller chord
// slope of tanh over the node's pre-activation interval, plus the IBP box.
// Global mode uses alpha = 0 and the unit box |phi| <= 1.
SemialgebraicSet tanh_sector_constraints(const NeuralNetwork& nn,
                                         const IbpBounds* bounds,
                                         const NetVars& vars);

// alpha for one tanh node interval; 1 in the degenerate zero-interval limit.
double tanh_sector_alpha(Interval pre);

// Pairwise slope sectors with [alpha, beta] = [0, 1]:
// (dphi)(dv - dphi) >= 0 for node pairs, intra-layer unless all_pairs.
SemialgebraicSet slope_constraints(const NeuralNetwork& nn, const NetVars& vars,
                                   bool all_pairs);

SemialgebraicSet region_constraints(const Box& box,
                                    std::span<const VarId> z_vars,
                                    const VariableSpace& space);
SemialgebraicSet region_from_polynomials(std::span<const Polynomial> dk);

// z3 (alpha z1 - z3) >= 0 for a recast variable in sector [0, alpha].
Polynomial recast_sector_constraint(VarId var, VarId driver, double alpha);
// alpha for z = x - sin(x) over [lo, hi]: max endpoint chord slope.
double recast_alpha_x_minus_sin(double lo, double hi);

// Saturated-input encoding. If the IBP output interval already sits inside
// [-u_max, u_max] the affine equality w = u is emitted (saturation inactive);
// otherwise w is tied to u by the sector (w - kappa u)(u - w) >= 0 with
// kappa = u_max / max|ibp_u|.
SemialgebraicSet saturation_constraints(VarId u_var, VarId w_var, double u_max,
                                        Interval ibp_u);

// (hi - delta)(delta - lo) >= 0.
Polynomial robustness_constraint(VarId delta, double lo, double hi);

// Affine-equality elimination: every equality that is affine with a constant
// unit-degree coefficient on an eliminable variable is solved for that
// variable and substituted through the set. Returns the substitution map in
// elimination order.
struct Elimination {
  std::vector<std::pair<VarId, Polynomial>> subs;

  Polynomial apply(Polynomial p) const;
};

SemialgebraicSet eliminate_affine_equalities(SemialgebraicSet s,
                                             std::span<const VarId> eliminable,
                                             Elimination* out);

// Human-readable dump with provenance tags, one constraint per line.
std::string dump_constraints(const SemialgebraicSet& s,
                             const VariableSpace& space);

}  // namespace nnsos
