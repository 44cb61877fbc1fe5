#include "pencil/report.hpp"

#include <algorithm>
#include <cmath>

#include "pencil/errors.hpp"

namespace pencil {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

Verdict classify(double value, double scale, const Thresholds& t) {
  if (!std::isfinite(value)) return Verdict::Fail;
  if (value <= t.pass * scale) return Verdict::Pass;
  if (value >= t.fail * scale) return Verdict::Fail;
  return Verdict::Inconclusive;
}

void ComplianceReport::push(Residual r) {
  if (has(r.name)) throw std::logic_error("duplicate report row '" + r.name + "'");
  rows_.push_back(std::move(r));
}

void ComplianceReport::add(std::string name, double value, double scale, const Thresholds& t,
                           bool gating, std::string note) {
  push(Residual{std::move(name), value, scale, classify(value, scale, t), gating, std::move(note)});
}

void ComplianceReport::add_decided(std::string name, double value, Verdict verdict, bool gating,
                                   std::string note) {
  push(Residual{std::move(name), value, 1.0, verdict, gating, std::move(note)});
}

void ComplianceReport::add_info(std::string name, double value, std::string note) {
  push(Residual{std::move(name), value, 1.0, Verdict::Pass, false, std::move(note)});
}

void ComplianceReport::merge(const ComplianceReport& other, std::string_view prefix) {
  for (Residual r : other.rows_) {
    r.name = std::string(prefix) + r.name;
    push(std::move(r));
  }
  for (double l : other.lambdas) {
    if (std::find(lambdas.begin(), lambdas.end(), l) == lambdas.end()) lambdas.push_back(l);
  }
  for (double l : other.skipped_lambdas) {
    if (std::find(skipped_lambdas.begin(), skipped_lambdas.end(), l) == skipped_lambdas.end()) {
      skipped_lambdas.push_back(l);
    }
  }
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
}

bool ComplianceReport::has(std::string_view name) const {
  return std::any_of(rows_.begin(), rows_.end(), [&](const Residual& r) { return r.name == name; });
}

const Residual& ComplianceReport::at(std::string_view name) const {
  for (const auto& r : rows_) {
    if (r.name == name) return r;
  }
  throw std::out_of_range("no report row '" + std::string(name) + "'");
}

Verdict ComplianceReport::verdict() const {
  Verdict v = Verdict::Pass;
  for (const auto& r : rows_) {
    if (!r.gating) continue;
    if (r.verdict == Verdict::Fail) return Verdict::Fail;
    if (r.verdict == Verdict::Inconclusive) v = Verdict::Inconclusive;
  }
  return v;
}

}  // namespace pencil
