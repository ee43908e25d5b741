#include "ipoc/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

namespace ipoc {

using nlohmann::json;

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw Error("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error("cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::string format_17(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// JSON has no inf/nan; they are written as null and read back as NaN.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

template <class T>
json list_json(const std::vector<T>& v) {
  json out = json::array();
  for (const T& x : v) out.push_back(x);
  return out;
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ReportFormatError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ReportFormatError(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double get_double(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw ReportFormatError(join(path, key), "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number_integer()) throw ReportFormatError(join(path, key), "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_boolean()) throw ReportFormatError(join(path, key), "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) throw ReportFormatError(join(path, key), "expected a string");
  return v.get<std::string>();
}

const json& get_array(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_array()) throw ReportFormatError(join(path, key), "expected an array");
  return v;
}

Vec get_vec(const json& obj, const std::string& key, const std::string& path) {
  const json& a = get_array(obj, key, path);
  Vec out(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_null()) {
      out(static_cast<Eigen::Index>(i)) = std::numeric_limits<double>::quiet_NaN();
    } else if (a[i].is_number()) {
      out(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    } else {
      throw ReportFormatError(join(path, key) + "[" + std::to_string(i) + "]",
                              "expected a number");
    }
  }
  return out;
}

std::vector<double> get_doubles(const json& obj, const std::string& key, const std::string& path) {
  const Vec v = get_vec(obj, key, path);
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::vector<int> get_ints(const json& obj, const std::string& key, const std::string& path) {
  const json& a = get_array(obj, key, path);
  std::vector<int> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number_integer()) {
      throw ReportFormatError(join(path, key) + "[" + std::to_string(i) + "]",
                              "expected an integer");
    }
    out.push_back(a[i].get<int>());
  }
  return out;
}

json kkt_json(const KktReport& k) {
  return {{"stationarity_res", number(k.stationarity_res)},
          {"adjoint_res", number(k.adjoint_res)},
          {"bc_res", number(k.bc_res)},
          {"comp_state", vec_json(k.comp_state)},
          {"comp_mixed", vec_json(k.comp_mixed)},
          {"comp_state_max", number(k.comp_state_max)},
          {"comp_mixed_max", number(k.comp_mixed_max)},
          {"comp_state_shifted", number(k.comp_state_shifted)},
          {"comp_mixed_shifted", number(k.comp_mixed_shifted)},
          {"nonneg_viol", number(k.nonneg_viol)},
          {"interiority_margin_g", vec_json(k.margins.g)},
          {"interiority_margin_c", vec_json(k.margins.c)},
          {"multiplier_l1_g", vec_json(k.multiplier_l1_g)},
          {"multiplier_l1_c", vec_json(k.multiplier_l1_c)},
          {"eps", number(k.eps)},
          {"horizon", number(k.horizon)},
          {"cost", number(k.cost)}};
}

KktReport kkt_from(const json& j, const std::string& p) {
  KktReport k;
  k.stationarity_res = get_double(j, "stationarity_res", p);
  k.adjoint_res = get_double(j, "adjoint_res", p);
  k.bc_res = get_double(j, "bc_res", p);
  k.comp_state = get_vec(j, "comp_state", p);
  k.comp_mixed = get_vec(j, "comp_mixed", p);
  k.comp_state_max = get_double(j, "comp_state_max", p);
  k.comp_mixed_max = get_double(j, "comp_mixed_max", p);
  k.comp_state_shifted = get_double(j, "comp_state_shifted", p);
  k.comp_mixed_shifted = get_double(j, "comp_mixed_shifted", p);
  k.nonneg_viol = get_double(j, "nonneg_viol", p);
  k.margins.g = get_vec(j, "interiority_margin_g", p);
  k.margins.c = get_vec(j, "interiority_margin_c", p);
  k.multiplier_l1_g = get_vec(j, "multiplier_l1_g", p);
  k.multiplier_l1_c = get_vec(j, "multiplier_l1_c", p);
  k.eps = get_double(j, "eps", p);
  k.horizon = get_double(j, "horizon", p);
  k.cost = get_double(j, "cost", p);
  return k;
}

// Display width of UTF-8 text: counts everything but continuation bytes.
std::size_t width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::string pad(const std::string& s, std::size_t w) {
  return s + std::string(w > width(s) ? w - width(s) : 0, ' ');
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "primal") return Method::Primal;
  if (name == "primal-dual") return Method::PrimalDual;
  throw InvalidArgument("unknown method '" + name + "' (expected primal or primal-dual)");
}

std::string trajectory_csv(const OcpSpec& spec, const DaeSolution& solution,
                           const Multipliers& multipliers) {
  const int n = spec.dims.n, m = spec.dims.m;
  const Eigen::Index rows = solution.y.rows();
  if (multipliers.g.rows() != rows || multipliers.c.rows() != rows ||
      multipliers.g.cols() != spec.dims.n_g || multipliers.c.cols() != spec.dims.n_c) {
    throw DimensionError("trajectory_csv: multiplier arrays do not match the solution");
  }
  std::ostringstream out;
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= n; ++i) out << ",p" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  for (int i = 1; i <= spec.dims.n_g; ++i) out << ",lg" << i;
  for (int i = 1; i <= spec.dims.n_c; ++i) out << ",lc" << i;
  out << "\n";
  for (Eigen::Index k = 0; k < rows; ++k) {
    out << format_17(solution.mesh.nodes(k));
    for (int i = 0; i < 2 * n; ++i) out << ',' << format_17(solution.y(k, i));
    for (int i = 0; i < m; ++i) out << ',' << format_17(solution.z(k, i));
    for (Eigen::Index i = 0; i < multipliers.g.cols(); ++i) {
      out << ',' << format_17(multipliers.g(k, i));
    }
    for (Eigen::Index i = 0; i < multipliers.c.cols(); ++i) {
      out << ',' << format_17(multipliers.c(k, i));
    }
    out << "\n";
  }
  return out.str();
}

json report_to_json(const SolveReport& r) {
  json j;
  j["format"] = "ipoc-report";
  j["version"] = 1;
  j["problem"] = r.problem;
  j["method"] = method_name(r.method);
  j["settings"] = {{"eps0", number(r.config.eps0)},
                   {"alpha", number(r.config.alpha)},
                   {"tol", number(r.config.tol)},
                   {"predictor_retry", r.config.predictor_retry},
                   {"newton_tol", number(r.options.newton_tol)},
                   {"mesh_tol", number(r.options.mesh_tol)},
                   {"max_newton", r.options.max_newton},
                   {"max_mesh_points", r.options.max_mesh_points},
                   {"max_mesh_passes", r.options.max_mesh_passes},
                   {"min_damping", number(r.options.min_damping)}};
  j["success"] = r.success;
  j["error"] = r.error;
  j["run"] = {{"method", method_name(r.run.method)},
              {"eps_iterations", r.run.eps_iterations},
              {"eps_schedule", list_json(r.run.eps_schedule)},
              {"newton_iters_per_eps", list_json(r.run.newton_iters_per_eps)},
              {"mesh_len_per_eps", list_json(r.run.mesh_len_per_eps)},
              {"final_mesh_len", r.run.final_mesh_len},
              {"wall_time", number(r.run.wall_time)}};
  j["kkt"] = r.kkt ? kkt_json(*r.kkt) : json(nullptr);
  if (r.reference) {
    j["reference"] = {{"method", method_name(r.reference->method)},
                      {"alpha", number(r.reference->alpha)},
                      {"iterations", r.reference->iterations},
                      {"mesh_len", r.reference->mesh_len},
                      {"exec_time_s", number(r.reference->exec_time_s)}};
  } else {
    j["reference"] = nullptr;
  }
  j["corrections"] = list_json(r.corrections);
  return j;
}

SolveReport report_from_json(const json& j) {
  SolveReport r;
  if (!j.is_object()) throw ReportFormatError("<root>", "expected an object");
  r.problem = get_string(j, "problem", "");
  try {
    r.method = parse_method(get_string(j, "method", ""));
  } catch (const InvalidArgument& e) {
    throw ReportFormatError("method", e.what());
  }
  const json& s = field(j, "settings", "");
  r.config.eps0 = get_double(s, "eps0", "settings");
  r.config.alpha = get_double(s, "alpha", "settings");
  r.config.tol = get_double(s, "tol", "settings");
  r.config.predictor_retry = get_bool(s, "predictor_retry", "settings");
  r.options.newton_tol = get_double(s, "newton_tol", "settings");
  r.options.mesh_tol = get_double(s, "mesh_tol", "settings");
  r.options.max_newton = get_int(s, "max_newton", "settings");
  r.options.max_mesh_points = get_int(s, "max_mesh_points", "settings");
  r.options.max_mesh_passes = get_int(s, "max_mesh_passes", "settings");
  r.options.min_damping = get_double(s, "min_damping", "settings");
  r.success = get_bool(j, "success", "");
  r.error = get_string(j, "error", "");

  const json& run = field(j, "run", "");
  try {
    r.run.method = parse_method(get_string(run, "method", "run"));
  } catch (const InvalidArgument& e) {
    throw ReportFormatError("run.method", e.what());
  }
  r.run.eps_iterations = get_int(run, "eps_iterations", "run");
  r.run.eps_schedule = get_doubles(run, "eps_schedule", "run");
  r.run.newton_iters_per_eps = get_ints(run, "newton_iters_per_eps", "run");
  r.run.mesh_len_per_eps = get_ints(run, "mesh_len_per_eps", "run");
  r.run.final_mesh_len = get_int(run, "final_mesh_len", "run");
  r.run.wall_time = get_double(run, "wall_time", "run");

  const json& kkt = field(j, "kkt", "");
  if (!kkt.is_null()) r.kkt = kkt_from(kkt, "kkt");
  const json& ref = field(j, "reference", "");
  if (!ref.is_null()) {
    ReferenceRow row;
    try {
      row.method = parse_method(get_string(ref, "method", "reference"));
    } catch (const InvalidArgument& e) {
      throw ReportFormatError("reference.method", e.what());
    }
    row.alpha = get_double(ref, "alpha", "reference");
    row.iterations = get_int(ref, "iterations", "reference");
    row.mesh_len = get_int(ref, "mesh_len", "reference");
    row.exec_time_s = get_double(ref, "exec_time_s", "reference");
    r.reference = row;
  }
  const json& corr = get_array(j, "corrections", "");
  for (std::size_t i = 0; i < corr.size(); ++i) {
    if (!corr[i].is_string()) {
      throw ReportFormatError("corrections[" + std::to_string(i) + "]", "expected a string");
    }
    r.corrections.push_back(corr[i].get<std::string>());
  }
  return r;
}

SolveReport parse_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ReportFormatError("<root>", std::string("not valid JSON: ") + e.what());
  }
  return report_from_json(j);
}

std::string render_table(const std::vector<SolveReport>& reports) {
  const std::vector<std::string> head = {"Method", "decay ratio α", "number of iterations",
                                         "final length of time array", "exec. time"};
  std::vector<std::vector<std::string>> rows;
  for (const SolveReport& r : reports) {
    rows.push_back({r.method == Method::Primal ? "Primal" : "Primal-dual",
                    format_double(r.config.alpha), std::to_string(r.run.eps_iterations),
                    std::to_string(r.run.final_mesh_len), format_double(r.run.wall_time) + " s"});
  }
  std::vector<std::size_t> w(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    w[c] = width(head[c]);
    for (const auto& row : rows) w[c] = std::max(w[c], width(row[c]));
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out << " | ";
      out << (c + 1 < cells.size() ? pad(cells[c], w[c]) : cells[c]);
    }
    out << "\n";
  };
  line(head);
  for (std::size_t c = 0; c < head.size(); ++c) {
    if (c) out << "-+-";
    out << std::string(w[c], '-');
  }
  out << "\n";
  for (const auto& row : rows) line(row);
  return out.str();
}

}  // namespace ipoc
