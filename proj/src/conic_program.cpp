#include "phaseret/conic.hpp"

#include "phaseret/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace phaseret::conic {

BlockValues::BlockValues(const ConicProgram& program) {
  for (const auto& b : program.blocks()) {
    if (b.kind == BlockKind::complex) {
      complex_.push_back(CVector::Zero(b.size));
      real_.emplace_back();
    } else {
      complex_.emplace_back();
      real_.push_back(RVector::Zero(b.size));
    }
  }
}

const CVector& BlockValues::complex_block(BlockId id) const { return complex_.at(id.index); }
CVector& BlockValues::complex_block(BlockId id) { return complex_.at(id.index); }
const RVector& BlockValues::real_block(BlockId id) const { return real_.at(id.index); }
RVector& BlockValues::real_block(BlockId id) { return real_.at(id.index); }

double ConstraintResiduals::max_violation() const {
  double worst = 0.0;
  for (const RVector* v : {&rank1, &linear, &nonneg}) {
    if (v->size() > 0) worst = std::max(worst, -v->minCoeff());
  }
  return worst;
}

BlockId ConicProgram::add_complex_block(std::string name, Eigen::Index size) {
  if (size < 1) throw std::invalid_argument("ConicProgram: block '" + name + "' must be nonempty");
  blocks_.push_back({std::move(name), BlockKind::complex, size, false});
  return {blocks_.size() - 1};
}

BlockId ConicProgram::add_real_block(std::string name, Eigen::Index size, bool nonnegative) {
  if (size < 1) throw std::invalid_argument("ConicProgram: block '" + name + "' must be nonempty");
  blocks_.push_back({std::move(name), BlockKind::real, size, nonnegative});
  return {blocks_.size() - 1};
}

const ConicProgram::Block& ConicProgram::block(BlockId id) const {
  if (id.index >= blocks_.size()) throw std::invalid_argument("ConicProgram: undeclared block");
  return blocks_[id.index];
}

void ConicProgram::check_block(BlockId id, BlockKind kind) const {
  if (block(id).kind != kind) {
    throw std::invalid_argument("ConicProgram: block '" + blocks_[id.index].name + "' has the wrong kind");
  }
}

void ConicProgram::check_expr(const AffineExpr& expr) const {
  if (!std::isfinite(expr.constant)) throw std::invalid_argument("ConicProgram: non-finite constant");
  for (const auto& t : expr.complex_terms) {
    check_block(t.block, BlockKind::complex);
    if (t.coeffs.size() != blocks_[t.block.index].size) throw DimensionMismatch("ConicProgram: coefficient length");
    if (!t.coeffs.allFinite()) throw std::invalid_argument("ConicProgram: non-finite coefficient");
  }
  for (const auto& t : expr.real_terms) {
    check_block(t.block, BlockKind::real);
    if (t.index < 0 || t.index >= blocks_[t.block.index].size) throw DimensionMismatch("ConicProgram: term index");
    if (!std::isfinite(t.coeff)) throw std::invalid_argument("ConicProgram: non-finite coefficient");
  }
}

void ConicProgram::add_squared_norm(BlockId id, double weight) {
  block(id);
  if (!(weight > 0.0) || !std::isfinite(weight)) throw std::invalid_argument("ConicProgram: weight must be positive");
  squared_.push_back({id, weight});
}

void ConicProgram::add_l1_norm(BlockId id, double weight) {
  block(id);
  if (!(weight > 0.0) || !std::isfinite(weight)) throw std::invalid_argument("ConicProgram: weight must be positive");
  l1_.push_back({id, weight});
}

void ConicProgram::add_linear(BlockId id, RVector coeffs) {
  check_block(id, BlockKind::real);
  if (coeffs.size() != blocks_[id.index].size) throw DimensionMismatch("ConicProgram: linear objective length");
  if (!coeffs.allFinite()) throw std::invalid_argument("ConicProgram: non-finite objective");
  linear_.push_back({id, std::move(coeffs)});
}

void ConicProgram::add_constraint(Rank1Soc constraint) {
  check_block(constraint.block, BlockKind::complex);
  if (constraint.a.size() != blocks_[constraint.block.index].size) {
    throw DimensionMismatch("ConicProgram: cone vector length");
  }
  if (!constraint.a.allFinite()) throw std::invalid_argument("ConicProgram: non-finite cone vector");
  check_expr(constraint.rhs);
  rank1_.push_back(std::move(constraint));
}

void ConicProgram::add_constraint(LinearIneq constraint) {
  check_expr(constraint.expr);
  ineq_.push_back(std::move(constraint));
}

double ConicProgram::evaluate(const AffineExpr& expr, const BlockValues& values) const {
  double v = expr.constant;
  for (const auto& t : expr.complex_terms) v += t.coeffs.dot(values.complex_block(t.block)).real();
  for (const auto& t : expr.real_terms) v += t.coeff * values.real_block(t.block)[t.index];
  return v;
}

double ConicProgram::objective(const BlockValues& values) const {
  auto sq = [&](BlockId id) {
    return blocks_[id.index].kind == BlockKind::complex ? values.complex_block(id).squaredNorm()
                                                         : values.real_block(id).squaredNorm();
  };
  auto l1 = [&](BlockId id) {
    return blocks_[id.index].kind == BlockKind::complex ? values.complex_block(id).cwiseAbs().sum()
                                                         : values.real_block(id).cwiseAbs().sum();
  };
  double f = constant_;
  for (const auto& t : squared_) f += t.weight * sq(t.block);
  for (const auto& t : l1_) f += t.weight * l1(t.block);
  for (const auto& t : linear_) f += t.coeffs.dot(values.real_block(t.block));
  return f;
}

ConstraintResiduals ConicProgram::residuals(const BlockValues& values) const {
  ConstraintResiduals r;
  r.rank1.resize(static_cast<Eigen::Index>(rank1_.size()));
  for (std::size_t i = 0; i < rank1_.size(); ++i) {
    const auto& c = rank1_[i];
    r.rank1[static_cast<Eigen::Index>(i)] =
        evaluate(c.rhs, values) - std::norm(c.a.dot(values.complex_block(c.block)));
  }
  r.linear.resize(static_cast<Eigen::Index>(ineq_.size()));
  for (std::size_t i = 0; i < ineq_.size(); ++i) r.linear[static_cast<Eigen::Index>(i)] = evaluate(ineq_[i].expr, values);
  Eigen::Index count = 0;
  for (const auto& b : blocks_) count += b.nonnegative ? b.size : 0;
  r.nonneg.resize(count);
  Eigen::Index k = 0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (!blocks_[b].nonnegative) continue;
    r.nonneg.segment(k, blocks_[b].size) = values.real_block({b});
    k += blocks_[b].size;
  }
  return r;
}

namespace {

using Triplet = Eigen::Triplet<double>;

class RowBuilder {
 public:
  explicit RowBuilder(const StandardForm& form) : form_(form) {}

  // Appends the row of G and entry of h for the slack s = e0 + e^T u.
  Eigen::Index affine_row(const AffineExpr& expr, double scale, double offset) {
    const Eigen::Index row = next_row_++;
    for (const auto& t : expr.complex_terms) {
      const Eigen::Index off = form_.block_offsets[t.block.index];
      const Eigen::Index n = t.coeffs.size();
      for (Eigen::Index j = 0; j < n; ++j) {
        push(row, off + j, -scale * t.coeffs[j].real());
        push(row, off + n + j, -scale * t.coeffs[j].imag());
      }
    }
    for (const auto& t : expr.real_terms) {
      push(row, form_.block_offsets[t.block.index] + t.index, -scale * t.coeff);
    }
    h.push_back(scale * expr.constant + offset);
    return row;
  }

  // s = sum coeff_k u_{col_k}.
  void simple_row(std::initializer_list<std::pair<Eigen::Index, double>> entries) {
    const Eigen::Index row = next_row_++;
    for (const auto& [col, coeff] : entries) push(row, col, -coeff);
    h.push_back(0.0);
  }

  Eigen::Index blank_row() {
    h.push_back(0.0);
    return next_row_++;
  }

  void push(Eigen::Index row, Eigen::Index col, double value) {
    if (value != 0.0) triplets.emplace_back(static_cast<int>(row), static_cast<int>(col), value);
  }

  Eigen::Index next_row() const { return next_row_; }

  std::vector<Triplet> triplets;
  std::vector<double> h;

 private:
  const StandardForm& form_;
  Eigen::Index next_row_ = 0;
};

}  // namespace

StandardForm canonicalize(const ConicProgram& program) {
  const auto& blocks = program.blocks();
  if (blocks.empty()) throw std::invalid_argument("canonicalize: program has no blocks");

  std::vector<bool> referenced(blocks.size(), false);
  auto mark_expr = [&](const AffineExpr& e) {
    for (const auto& t : e.complex_terms) referenced[t.block.index] = true;
    for (const auto& t : e.real_terms) referenced[t.block.index] = true;
  };
  for (const auto& t : program.squared_norms()) referenced[t.block.index] = true;
  for (const auto& t : program.l1_norms()) referenced[t.block.index] = true;
  for (const auto& t : program.linear_objectives()) referenced[t.block.index] = true;
  for (const auto& c : program.rank1_constraints()) {
    referenced[c.block.index] = true;
    mark_expr(c.rhs);
  }
  for (const auto& c : program.linear_constraints()) mark_expr(c.expr);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (!referenced[b]) throw std::invalid_argument("canonicalize: block '" + blocks[b].name + "' is unreferenced");
  }

  StandardForm form;
  form.blocks = blocks;
  Eigen::Index col = 0;
  for (const auto& b : blocks) {
    form.block_offsets.push_back(col);
    col += b.kind == BlockKind::complex ? 2 * b.size : b.size;
  }
  form.epigraph_offset = col;
  std::vector<double> epigraph_weight;
  for (const auto& t : program.l1_norms()) {
    for (Eigen::Index i = 0; i < blocks[t.block.index].size; ++i) {
      form.epigraph.push_back({t.block.index, i});
      epigraph_weight.push_back(t.weight);
    }
  }
  form.n = col + static_cast<Eigen::Index>(form.epigraph.size());

  form.p_diag = RVector::Zero(form.n);
  form.c = RVector::Zero(form.n);
  form.constant = program.constant();
  for (const auto& t : program.squared_norms()) {
    const auto& b = blocks[t.block.index];
    const Eigen::Index width = b.kind == BlockKind::complex ? 2 * b.size : b.size;
    form.p_diag.segment(form.block_offsets[t.block.index], width).array() += 2.0 * t.weight;
  }
  for (const auto& t : program.linear_objectives()) {
    form.c.segment(form.block_offsets[t.block.index], t.coeffs.size()) += t.coeffs;
  }
  for (std::size_t k = 0; k < form.epigraph.size(); ++k) {
    form.c[form.epigraph_offset + static_cast<Eigen::Index>(k)] += epigraph_weight[k];
  }

  RowBuilder rb(form);
  // Nonnegative orthant rows.
  for (const auto& c : program.linear_constraints()) rb.affine_row(c.expr, 1.0, 0.0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (!blocks[b].nonnegative) continue;
    for (Eigen::Index i = 0; i < blocks[b].size; ++i) rb.simple_row({{form.block_offsets[b] + i, 1.0}});
  }
  for (std::size_t k = 0; k < form.epigraph.size(); ++k) {
    const auto& e = form.epigraph[k];
    if (blocks[e.block].kind != BlockKind::real) continue;
    const Eigen::Index t = form.epigraph_offset + static_cast<Eigen::Index>(k);
    const Eigen::Index v = form.block_offsets[e.block] + e.index;
    rb.simple_row({{t, 1.0}, {v, -1.0}});
    rb.simple_row({{t, 1.0}, {v, 1.0}});
  }
  form.nonneg_dim = rb.next_row();

  // |a^H x|^2 <= r  <=>  (r/2k + k/2, Re a^H x, Im a^H x, r/2k - k/2) in SOC(4),
  // with k = sqrt of the constant part of r so the cone is balanced near it.
  for (const auto& c : program.rank1_constraints()) {
    const Eigen::Index off = form.block_offsets[c.block.index];
    const Eigen::Index n = c.a.size();
    const double k = c.rhs.constant > 0.0 ? std::sqrt(c.rhs.constant) : 1.0;
    rb.affine_row(c.rhs, 0.5 / k, 0.5 * k);
    const Eigen::Index re_row = rb.blank_row();
    const Eigen::Index im_row = rb.blank_row();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double ar = c.a[j].real();
      const double ai = c.a[j].imag();
      rb.push(re_row, off + j, -ar);
      rb.push(re_row, off + n + j, -ai);
      rb.push(im_row, off + j, -ai);
      rb.push(im_row, off + n + j, ar);
    }
    rb.affine_row(c.rhs, 0.5 / k, -0.5 * k);
    form.soc_dims.push_back(4);
  }
  for (std::size_t k = 0; k < form.epigraph.size(); ++k) {
    const auto& e = form.epigraph[k];
    if (blocks[e.block].kind != BlockKind::complex) continue;
    const Eigen::Index t = form.epigraph_offset + static_cast<Eigen::Index>(k);
    const Eigen::Index off = form.block_offsets[e.block];
    rb.simple_row({{t, 1.0}});
    rb.simple_row({{off + e.index, 1.0}});
    rb.simple_row({{off + blocks[e.block].size + e.index, 1.0}});
    form.soc_dims.push_back(3);
  }

  const Eigen::Index m = rb.next_row();
  form.g.resize(m, form.n);
  form.g.setFromTriplets(rb.triplets.begin(), rb.triplets.end());
  form.g.makeCompressed();
  form.h = Eigen::Map<const RVector>(rb.h.data(), static_cast<Eigen::Index>(rb.h.size()));
  return form;
}

double StandardForm::objective(const RVector& u) const {
  return 0.5 * u.dot(p_diag.cwiseProduct(u)) + c.dot(u) + constant;
}

RVector StandardForm::lift(const BlockValues& values) const {
  RVector u = RVector::Zero(n);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Eigen::Index off = block_offsets[b];
    if (blocks[b].kind == BlockKind::complex) {
      const CVector& v = values.complex_block({b});
      u.segment(off, v.size()) = v.real();
      u.segment(off + v.size(), v.size()) = v.imag();
    } else {
      const RVector& v = values.real_block({b});
      u.segment(off, v.size()) = v;
    }
  }
  for (std::size_t k = 0; k < epigraph.size(); ++k) {
    const auto& e = epigraph[k];
    const double mag = blocks[e.block].kind == BlockKind::complex ? std::abs(values.complex_block({e.block})[e.index])
                                                                  : std::abs(values.real_block({e.block})[e.index]);
    u[epigraph_offset + static_cast<Eigen::Index>(k)] = mag;
  }
  return u;
}

BlockValues StandardForm::back_map(const RVector& u) const {
  if (u.size() != n) throw DimensionMismatch("back_map: vector length");
  ConicProgram shape;
  for (const auto& b : blocks) {
    if (b.kind == BlockKind::complex) shape.add_complex_block(b.name, b.size);
    else shape.add_real_block(b.name, b.size, b.nonnegative);
  }
  BlockValues values(shape);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Eigen::Index off = block_offsets[b];
    const Eigen::Index size = blocks[b].size;
    if (blocks[b].kind == BlockKind::complex) {
      CVector& v = values.complex_block({b});
      for (Eigen::Index j = 0; j < size; ++j) v[j] = Complex(u[off + j], u[off + size + j]);
    } else {
      values.real_block({b}) = u.segment(off, size);
    }
  }
  return values;
}

void StandardForm::write_debug(std::ostream& os) const {
  const auto flags = os.flags();
  os << std::setprecision(17);
  os << "n " << n << " rows " << rows() << " nonneg " << nonneg_dim << " soc " << soc_dims.size() << '\n';
  os << "soc_dims";
  for (auto d : soc_dims) os << ' ' << d;
  os << '\n';
  os << "constant " << constant << '\n';
  os << "P " << (p_diag.array() != 0.0).count() << '\n';
  for (Eigen::Index i = 0; i < n; ++i)
    if (p_diag[i] != 0.0) os << i << ' ' << i << ' ' << p_diag[i] << '\n';
  os << "c " << (c.array() != 0.0).count() << '\n';
  for (Eigen::Index i = 0; i < n; ++i)
    if (c[i] != 0.0) os << i << ' ' << c[i] << '\n';
  os << "h " << (h.array() != 0.0).count() << '\n';
  for (Eigen::Index i = 0; i < h.size(); ++i)
    if (h[i] != 0.0) os << i << ' ' << h[i] << '\n';
  os << "G " << g.nonZeros() << '\n';
  for (Eigen::Index r = 0; r < g.outerSize(); ++r)
    for (decltype(g)::InnerIterator it(g, r); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  os.flags(flags);
}

}  // namespace phaseret::conic
