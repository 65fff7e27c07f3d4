#include "satrack/config.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>

namespace satrack {
namespace {

struct Field {
  const char* name;
  std::function<void(RunOptions&, const std::string&, int line)> set;
  std::function<std::string(const RunOptions&)> get;
};

double parse_double(const std::string& key, const std::string& v, int line) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key, line, "expected a real number, got '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v, int line) {
  long long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key, line, "expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v, int line) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key, line, "expected an unsigned integer, got '" + v + "'");
  return x;
}

std::string fmt_double(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, p);
}

#define REAL_FIELD(member)                                                              \
  Field{#member,                                                                        \
        [](RunOptions& o, const std::string& v, int ln) {                               \
          o.sim.member = parse_double(#member, v, ln);                                  \
        },                                                                              \
        [](const RunOptions& o) { return fmt_double(o.sim.member); }}

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = {
      REAL_FIELD(dt),
      Field{"horizon",
            [](RunOptions& o, const std::string& v, int ln) {
              o.sim.horizon = static_cast<int>(parse_int("horizon", v, ln));
            },
            [](const RunOptions& o) { return std::to_string(o.sim.horizon); }},
      REAL_FIELD(sigma_r),
      REAL_FIELD(sigma_az),
      REAL_FIELD(sigma_el),
      REAL_FIELD(p_out),
      REAL_FIELD(sigma_out),
      REAL_FIELD(d_star),
      REAL_FIELD(d_min),
      REAL_FIELD(d_max),
      REAL_FIELD(u_min),
      REAL_FIELD(u_max),
      REAL_FIELD(v_max),
      REAL_FIELD(a_max),
      REAL_FIELD(alpha_risk),
      REAL_FIELD(omega),
      REAL_FIELD(k_r),
      REAL_FIELD(k_vr),
      REAL_FIELD(k_z),
      REAL_FIELD(k_vz),
      REAL_FIELD(k_tau),
      REAL_FIELD(cauchy_c),
      Field{"window_size",
            [](RunOptions& o, const std::string& v, int ln) {
              o.sim.window_size = static_cast<int>(parse_int("window_size", v, ln));
            },
            [](const RunOptions& o) { return std::to_string(o.sim.window_size); }},
      Field{"seed",
            [](RunOptions& o, const std::string& v, int ln) {
              o.sim.seed = parse_u64("seed", v, ln);
            },
            [](const RunOptions& o) { return std::to_string(o.sim.seed); }},
      Field{"jobs",
            [](RunOptions& o, const std::string& v, int ln) {
              o.jobs = static_cast<int>(parse_int("jobs", v, ln));
            },
            [](const RunOptions& o) { return std::to_string(o.jobs); }},
      Field{"runs",
            [](RunOptions& o, const std::string& v, int ln) {
              o.runs = static_cast<int>(parse_int("runs", v, ln));
            },
            [](const RunOptions& o) { return std::to_string(o.runs); }},
      Field{"out", [](RunOptions& o, const std::string& v, int) { o.out = v; },
            [](const RunOptions& o) { return o.out; }},
  };
  return fields;
}

#undef REAL_FIELD

const Field* find_field(const std::string& key) {
  for (const auto& f : registry())
    if (key == f.name) return &f;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void require(bool ok, const char* key, const std::string& why) {
  if (!ok) throw ConfigError(key, 0, why);
}

}  // namespace

void SimConfig::validate() const {
  require(dt > 0, "dt", "must be positive");
  require(horizon >= 1, "horizon", "must be at least 1");
  require(sigma_r >= 0, "sigma_r", "must be non-negative");
  require(sigma_az >= 0, "sigma_az", "must be non-negative");
  require(sigma_el >= 0, "sigma_el", "must be non-negative");
  require(p_out >= 0.0 && p_out <= 1.0, "p_out", "must be in [0, 1]");
  require(sigma_out >= 0, "sigma_out", "must be non-negative");
  require(d_min < d_star, "d_star", "requires d_min < d_star");
  require(d_star < d_max, "d_star", "requires d_star < d_max");
  require(d_min > 0, "d_min", "must be positive");
  require(u_min < u_max, "u_max", "requires u_min < u_max");
  require(u_min < 0 && u_max > 0, "u_min", "input box must contain zero");
  require(v_max > 0, "v_max", "must be positive");
  require(a_max >= 0, "a_max", "must be non-negative");
  require(alpha_risk > 0.0 && alpha_risk < 1.0, "alpha_risk", "must be in (0, 1)");
  require(omega > 0, "omega", "must be positive");
  require(k_r > 0, "k_r", "must be positive");
  require(k_vr > 0, "k_vr", "must be positive");
  require(k_z > 0, "k_z", "must be positive");
  require(k_vz > 0, "k_vz", "must be positive");
  require(k_tau > 0, "k_tau", "must be positive");
  require(cauchy_c > 0, "cauchy_c", "must be positive");
  require(window_size >= 2, "window_size", "must be at least 2");
}

void RunOptions::validate() const {
  sim.validate();
  require(jobs >= 1, "jobs", "must be at least 1");
  require(runs >= 1, "runs", "must be at least 1");
  require(!out.empty(), "out", "must not be empty");
}

RunOptions parse_config_text(const std::string& text, const RunOptions& base) {
  RunOptions opts = base;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Field* f = find_field(key);
    if (!f) throw ConfigError(key, line_no, "unknown key");
    f->set(opts, value, line_no);
  }
  return opts;
}

RunOptions parse_config_file(const std::string& path, const RunOptions& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), base);
}

void apply_override(RunOptions& opts, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError(key, 0, "unknown key in override");
  f->set(opts, value, 0);
}

std::string serialize_config(const RunOptions& opts) {
  std::ostringstream out;
  for (const auto& f : registry()) out << f.name << " = " << f.get(opts) << "\n";
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : registry()) keys.emplace_back(f.name);
  return keys;
}

}  // namespace satrack
