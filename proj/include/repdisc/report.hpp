#pragma once

// JSON text for metric and verification reports. Keys keep insertion order so
// identical inputs serialize to identical bytes.

#include <string>

#include "json.hpp"
#include "repdisc/distances.hpp"
#include "repdisc/probes.hpp"
#include "repdisc/verify.hpp"

namespace repdisc {

using Json = nlohmann::ordered_json;

inline Json to_json(const MetricValue& m) {
  Json aux = Json::object();
  for (const auto& [k, v] : m.aux) aux[k] = v;
  return Json{{"name", m.name}, {"value", m.value}, {"aux", aux}};
}

inline Json to_json(const VerifyReport& r) {
  return Json{{"theorem", r.theorem},
              {"theoretical", r.theoretical},
              {"empirical_mean", r.empirical_mean},
              {"empirical_stderr", r.empirical_stderr},
              {"trials", r.trials},
              {"n", r.n},
              {"seed", r.seed},
              {"pass", r.pass},
              {"tolerance_rule", r.tolerance_rule}};
}

inline VerifyReport verify_report_from_json(const Json& j) {
  VerifyReport r;
  r.theorem = j.at("theorem").get<std::string>();
  r.theoretical = j.at("theoretical").get<double>();
  r.empirical_mean = j.at("empirical_mean").get<double>();
  r.empirical_stderr = j.at("empirical_stderr").get<double>();
  r.trials = j.at("trials").get<std::int64_t>();
  r.n = j.at("n").get<std::int64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.pass = j.at("pass").get<bool>();
  r.tolerance_rule = j.at("tolerance_rule").get<std::string>();
  return r;
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const LogisticHead& h) {
  return Json{{"kind", "logistic"},
              {"num_classes", h.w.rows()},
              {"dims", h.w.cols()},
              {"W", matrix_to_json(h.w)},
              {"b", vector_to_json(h.b)},
              {"converged", h.converged},
              {"iterations", h.iterations},
              {"final_grad_norm", h.final_grad_norm},
              {"learning_rate", h.config.learning_rate},
              {"max_iters", h.config.max_iters},
              {"grad_tol", h.config.grad_tol},
              {"l2", h.config.l2}};
}

inline Json to_json(const LinearHead& h) {
  return Json{{"kind", "linear"}, {"dims", h.w.size()}, {"W", vector_to_json(h.w.transpose())}, {"b", h.b}};
}

}  // namespace repdisc
