#include "bsvie/paths.hpp"

#include <atomic>
#include <string>

#include "bsvie/errors.hpp"

namespace bsvie {

namespace {
std::atomic<std::size_t> g_budget{std::size_t{4} << 30};
}

std::size_t memory_budget_bytes() { return g_budget.load(); }

void set_memory_budget_bytes(std::size_t bytes) { g_budget.store(bytes); }

void require_capacity(std::size_t count, const char* what) {
  const std::size_t budget = memory_budget_bytes() / sizeof(double);
  if (count > budget) {
    throw CapacityError(std::string(what) + " needs " + std::to_string(count * sizeof(double)) +
                        " bytes, over the memory budget of " + std::to_string(memory_budget_bytes()) + " bytes");
  }
}

std::string to_string(Feature f) {
  switch (f) {
    case Feature::kState: return "W(t)";
    case Feature::kTerminal: return "W(T)";
    case Feature::kHistory: return "history";
    case Feature::kPath: return "path";
  }
  return "?";
}

Feature feature_from_string(const std::string& tag) {
  if (tag == "W(t)" || tag == "state") return Feature::kState;
  if (tag == "W(T)" || tag == "terminal") return Feature::kTerminal;
  if (tag == "history") return Feature::kHistory;
  if (tag == "path") return Feature::kPath;
  throw ConfigError("unknown path feature tag '" + tag + "'");
}

std::span<const double> PathView::W(std::size_t k) const {
  const bool ok = k == 0 || allowed_.contains(Feature::kPath) ||
                  (k == index_ && allowed_.contains(Feature::kState)) ||
                  (k == grid_->steps() && allowed_.contains(Feature::kTerminal)) ||
                  (k <= index_ && allowed_.contains(Feature::kHistory));
  if (!ok) {
    throw ContractError("path functional read W(t_" + std::to_string(k) + ") at node " + std::to_string(index_) +
                        " without declaring the feature");
  }
  return {states_ + k * stride_, dim_};
}

PathEnsemble::PathEnsemble(TimeGrid grid, std::size_t paths, std::size_t dim, std::uint64_t seed,
                           std::vector<double> increments)
    : grid_(std::move(grid)), paths_(paths), dim_(dim), seed_(seed), increments_(std::move(increments)) {
  const std::size_t n = grid_.steps();
  if (increments_.size() != n * paths_ * dim_) throw ContractError("increment array has the wrong size");
  states_.assign((n + 1) * paths_ * dim_, 0.0);
  const std::size_t slice = paths_ * dim_;
  for (std::size_t j = 0; j < n; ++j) {
    const double* prev = states_.data() + j * slice;
    const double* inc = increments_.data() + j * slice;
    double* next = states_.data() + (j + 1) * slice;
    for (std::size_t q = 0; q < slice; ++q) next[q] = prev[q] + inc[q];
  }
}

}  // namespace bsvie
