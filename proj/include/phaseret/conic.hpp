#pragma once

#include "phaseret/core.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace phaseret::conic {

struct BlockId {
  std::size_t index = 0;
};

enum class BlockKind { complex, real };

/// coeff * v[index] for a real block.
struct RealTerm {
  BlockId block;
  Eigen::Index index = 0;
  double coeff = 0.0;
};

/// Re{coeffs^H x} over a whole complex block.
struct ComplexTerm {
  BlockId block;
  CVector coeffs;
};

struct AffineExpr {
  double constant = 0.0;
  std::vector<ComplexTerm> complex_terms;
  std::vector<RealTerm> real_terms;

  AffineExpr& add(BlockId block, Eigen::Index index, double coeff) {
    real_terms.push_back({block, index, coeff});
    return *this;
  }
  AffineExpr& add(BlockId block, CVector coeffs) {
    complex_terms.push_back({block, std::move(coeffs)});
    return *this;
  }
};

/// |a^H x|^2 <= rhs for a complex block x.
struct Rank1Soc {
  BlockId block;
  CVector a;
  AffineExpr rhs;
};

/// expr >= 0.
struct LinearIneq {
  AffineExpr expr;
};

class ConicProgram;

/// One value vector per declared block.
class BlockValues {
 public:
  BlockValues() = default;
  /// Zero values shaped after `program`.
  explicit BlockValues(const ConicProgram& program);

  const CVector& complex_block(BlockId id) const;
  CVector& complex_block(BlockId id);
  const RVector& real_block(BlockId id) const;
  RVector& real_block(BlockId id);

 private:
  std::vector<CVector> complex_;
  std::vector<RVector> real_;
};

struct ConstraintResiduals {
  RVector rank1;    // rhs - |a^H x|^2
  RVector linear;   // expr
  RVector nonneg;   // entries of nonnegative blocks, concatenated
  /// Largest violation (0 when every slack is >= 0).
  double max_violation() const;
};

/// min  sum w_b ||v_b||^2 + sum u_b ||v_b||_1 + sum c_b^T v_b + const
/// s.t. rank-one second-order-cone constraints and linear inequalities.
class ConicProgram {
 public:
  struct Block {
    std::string name;
    BlockKind kind;
    Eigen::Index size;
    bool nonnegative;
  };
  struct WeightedBlock {
    BlockId block;
    double weight;
  };
  struct LinearObjective {
    BlockId block;
    RVector coeffs;
  };

  BlockId add_complex_block(std::string name, Eigen::Index size);
  BlockId add_real_block(std::string name, Eigen::Index size, bool nonnegative = false);

  void add_squared_norm(BlockId block, double weight = 1.0);
  /// Complex entries contribute their modulus.
  void add_l1_norm(BlockId block, double weight = 1.0);
  void add_linear(BlockId block, RVector coeffs);
  void add_constant(double value) { constant_ += value; }

  void add_constraint(Rank1Soc constraint);
  void add_constraint(LinearIneq constraint);

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  const Block& block(BlockId id) const;
  const std::vector<WeightedBlock>& squared_norms() const noexcept { return squared_; }
  const std::vector<WeightedBlock>& l1_norms() const noexcept { return l1_; }
  const std::vector<LinearObjective>& linear_objectives() const noexcept { return linear_; }
  double constant() const noexcept { return constant_; }
  const std::vector<Rank1Soc>& rank1_constraints() const noexcept { return rank1_; }
  const std::vector<LinearIneq>& linear_constraints() const noexcept { return ineq_; }

  double objective(const BlockValues& values) const;
  double evaluate(const AffineExpr& expr, const BlockValues& values) const;
  ConstraintResiduals residuals(const BlockValues& values) const;

 private:
  void check_block(BlockId id, BlockKind kind) const;
  void check_expr(const AffineExpr& expr) const;

  std::vector<Block> blocks_;
  std::vector<WeightedBlock> squared_;
  std::vector<WeightedBlock> l1_;
  std::vector<LinearObjective> linear_;
  double constant_ = 0.0;
  std::vector<Rank1Soc> rank1_;
  std::vector<LinearIneq> ineq_;
};

/// min 1/2 u^T diag(p) u + c^T u + constant  s.t.  G u + s = h,  s in K,
/// K = R_+^{nonneg_dim} x SOC(soc_dims[0]) x ...
struct StandardForm {
  Eigen::Index n = 0;
  RVector p_diag;
  RVector c;
  double constant = 0.0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> g;
  RVector h;
  Eigen::Index nonneg_dim = 0;
  std::vector<Eigen::Index> soc_dims;

  // Layout: column offset of each block (complex blocks take 2*size columns,
  // real parts first), followed by one epigraph column per l1-penalized entry.
  std::vector<ConicProgram::Block> blocks;
  std::vector<Eigen::Index> block_offsets;
  struct EpigraphColumn {
    std::size_t block;
    Eigen::Index index;
  };
  std::vector<EpigraphColumn> epigraph;
  Eigen::Index epigraph_offset = 0;

  Eigen::Index rows() const noexcept { return h.size(); }
  double objective(const RVector& u) const;
  /// Standard-form point for the given block values (epigraph columns tight).
  RVector lift(const BlockValues& values) const;
  BlockValues back_map(const RVector& u) const;
  /// Plain-text dump: dimensions, cone list and the nonzeros of G, h, c, P.
  void write_debug(std::ostream& os) const;
};

/// Throws std::invalid_argument for blocks referenced by no term or constraint.
StandardForm canonicalize(const ConicProgram& program);

struct SolverSettings {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  int max_iter = 100;
  double step_fraction = 0.99;
};

enum class SolveStatus { optimal, max_iter, infeasible, unbounded, numerical_failure };

const char* to_string(SolveStatus status);

struct StandardSolution {
  RVector u;
  RVector s;
  RVector z;
  SolveStatus status = SolveStatus::numerical_failure;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  bool reduced_accuracy = false;  // optimal only within 100x the tolerances
};

struct ConicSolution {
  BlockValues primal;
  double objective_value = 0.0;  // program objective at `primal`
  double gap = 0.0;
  SolveStatus status = SolveStatus::numerical_failure;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool reduced_accuracy = false;
};

/// Primal-dual interior-point method on the homogeneous self-dual embedding
/// with Nesterov-Todd scaling. Holds its own workspace; not reentrant.
class InteriorPointSolver {
 public:
  explicit InteriorPointSolver(SolverSettings settings = {}) : settings_(settings) {}
  StandardSolution solve(const StandardForm& form);

 private:
  SolverSettings settings_;
};

ConicSolution solve(const ConicProgram& program, const SolverSettings& settings = {});

}  // namespace phaseret::conic
