#include "pitsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pitsim/errors.hpp"

namespace pitsim {
namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::PitRun, "pit-run"}, {Command::PitReplay, "pit-replay"}, {Command::MoranRun, "moran-run"},
    {Command::Couple, "couple"},  {Command::Speed, "speed"},          {Command::Heuristics, "heuristics"},
    {Command::Gw, "gw"},          {Command::Fclt, "fclt"},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(std::string_view key, const std::string& msg) {
  throw ConfigError(std::string(key) + ": " + msg);
}

double to_real(std::string_view key, std::string_view v) {
  v = trim(v);
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x))
    bad(key, "expected a real number, got '" + std::string(v) + "'");
  return x;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  v = trim(v);
  Int x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    bad(key, "expected an integer, got '" + std::string(v) + "'");
  return x;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::vector<double> to_reals(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto item : split(v, ',')) out.push_back(to_real(key, item));
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + fmt(v[k]);
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical(const Scenario& s, bool with_host_keys) {
  std::ostringstream o;
  o << "command = " << command_name(s.command) << "\n";
  o << "lambda = " << fmt(s.lambda) << "\n";
  o << "gamma = " << s.gamma.to_string() << "\n";
  o << "input = " << s.input << "\n";
  o << "N = " << s.population << "\n";
  o << "horizon = " << fmt(s.horizon) << "\n";
  o << "replicates = " << s.replicates << "\n";
  o << "seed = " << s.seed << "\n";
  o << "grid_step = " << fmt(s.grid_step) << "\n";
  if (with_host_keys) {
    o << "out = " << s.out << "\n";
    o << "threads = " << s.threads << "\n";
  }
  o << "cycles = " << s.cycles << "\n";
  o << "f0 = " << fmt(s.f0) << "\n";
  o << "start = ";
  for (std::size_t k = 0; k < s.start.size(); ++k)
    o << (k ? "," : "") << fmt(s.start[k].height) << ":" << fmt(s.start[k].slope);
  o << "\n";
  o << "immigration.times = " << join(s.immigration_times) << "\n";
  o << "immigration.increments = " << join(s.immigration_increments) << "\n";
  o << "immigration.contender = ";
  for (std::size_t k = 0; k < s.immigration_contender.size(); ++k)
    o << (k ? "," : "") << (s.immigration_contender[k] ? 1 : 0);
  o << "\n";
  o << "gw.b = " << fmt(s.gw_birth) << "\n";
  o << "gw.d = " << fmt(s.gw_death) << "\n";
  o << "gw.z = " << s.gw_initial << "\n";
  o << "gw.cap = " << s.gw_cap << "\n";
  o << "fclt.n = " << fmt(s.fclt_n) << "\n";
  o << "fclt.times = " << join(s.fclt_times) << "\n";
  o << "fclt.v = " << (s.fclt_v ? fmt(*s.fclt_v) : "") << "\n";
  o << "fclt.sigma2 = " << (s.fclt_sigma2 ? fmt(*s.fclt_sigma2) : "") << "\n";
  return o.str();
}

}  // namespace

std::string_view command_name(Command c) {
  for (const auto& [cmd, name] : kCommands)
    if (cmd == c) return name;
  return "?";
}

Command parse_command(std::string_view name) {
  for (const auto& [cmd, n] : kCommands)
    if (n == trim(name)) return cmd;
  bad("command", "unknown command '" + std::string(name) + "'");
}

std::string Scenario::to_text() const { return canonical(*this, true); }

std::string Scenario::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical(*this, false))));
  return buf;
}

void Scenario::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "command") {
    command = parse_command(value);
  } else if (key == "lambda") {
    lambda = to_real(key, value);
  } else if (key == "gamma") {
    try {
      gamma = IncrementDistribution::parse(value);
    } catch (const ConfigError& e) {
      bad(key, e.what());
    }
  } else if (key == "input") {
    if (value != "limit" && value != "contenders") bad(key, "expected 'limit' or 'contenders'");
    input = std::string(value);
  } else if (key == "N") {
    population = to_int<std::int64_t>(key, value);
  } else if (key == "horizon") {
    horizon = to_real(key, value);
  } else if (key == "replicates") {
    replicates = to_int<std::size_t>(key, value);
  } else if (key == "seed") {
    seed = to_int<std::uint64_t>(key, value);
  } else if (key == "grid_step") {
    grid_step = to_real(key, value);
  } else if (key == "out") {
    out = std::string(value);
  } else if (key == "cycles") {
    cycles = to_int<std::size_t>(key, value);
  } else if (key == "threads") {
    threads = to_int<unsigned>(key, value);
  } else if (key == "f0") {
    f0 = to_real(key, value);
  } else if (key == "start") {
    start.clear();
    for (auto item : split(value, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) bad(key, "entries are written height:slope");
      start.push_back({to_real(key, item.substr(0, colon)), to_real(key, item.substr(colon + 1))});
    }
  } else if (key == "immigration.times") {
    immigration_times = to_reals(key, value);
  } else if (key == "immigration.increments") {
    immigration_increments = to_reals(key, value);
  } else if (key == "immigration.contender") {
    immigration_contender.clear();
    for (auto item : split(value, ',')) {
      if (item != "0" && item != "1") bad(key, "expected 0 or 1, got '" + std::string(item) + "'");
      immigration_contender.push_back(item == "1");
    }
  } else if (key == "gw.b") {
    gw_birth = to_real(key, value);
  } else if (key == "gw.d") {
    gw_death = to_real(key, value);
  } else if (key == "gw.z") {
    gw_initial = to_int<std::int64_t>(key, value);
  } else if (key == "gw.cap") {
    gw_cap = to_int<std::int64_t>(key, value);
  } else if (key == "fclt.n") {
    fclt_n = to_real(key, value);
  } else if (key == "fclt.times") {
    fclt_times = to_reals(key, value);
  } else if (key == "fclt.v") {
    fclt_v = value.empty() ? std::nullopt : std::optional(to_real(key, value));
  } else if (key == "fclt.sigma2") {
    fclt_sigma2 = value.empty() ? std::nullopt : std::optional(to_real(key, value));
  } else {
    bad(key, "unknown key");
  }
}

void Scenario::validate() const {
  auto positive = [](std::string_view key, double x) {
    if (!(x > 0.0)) bad(key, "must be positive, got " + fmt(x));
  };
  if (replicates < 1) bad("replicates", "must be at least 1");
  positive("grid_step", grid_step);
  switch (command) {
    case Command::PitRun:
    case Command::Speed:
    case Command::Heuristics:
    case Command::Fclt:
      positive("lambda", lambda);
      break;
    case Command::MoranRun:
      if (!(lambda >= 0.0)) bad("lambda", "must be nonnegative, got " + fmt(lambda));
      break;
    default:
      break;
  }
  if (command == Command::PitRun || command == Command::PitReplay || command == Command::MoranRun ||
      command == Command::Couple)
    positive("horizon", horizon);
  if (command == Command::MoranRun || command == Command::Couple) {
    if (population < 2) bad("N", "must be at least 2");
  }
  if (command == Command::PitReplay || command == Command::Couple) {
    if (immigration_increments.size() != immigration_times.size())
      bad("immigration.increments", "must have one entry per immigration time");
    if (!immigration_contender.empty() && immigration_contender.size() != immigration_times.size())
      bad("immigration.contender", "must have one entry per immigration time");
  }
  if (command == Command::Speed && cycles < 2) bad("cycles", "must be at least 2");
  if (command == Command::Gw) {
    if (gw_birth < 0.0) bad("gw.b", "must be nonnegative");
    if (gw_death < 0.0) bad("gw.d", "must be nonnegative");
    if (gw_initial < 1) bad("gw.z", "must be positive");
    if (gw_cap < 1) bad("gw.cap", "must be positive");
    positive("horizon", horizon);
  }
  if (command == Command::Fclt) {
    positive("fclt.n", fclt_n);
    if (fclt_times.empty()) bad("fclt.times", "must not be empty");
    for (double t : fclt_times) positive("fclt.times", t);
    if (!std::is_sorted(fclt_times.begin(), fclt_times.end())) bad("fclt.times", "must be increasing");
    if (fclt_sigma2) positive("fclt.sigma2", *fclt_sigma2);
  }
}

std::vector<ImmigrationEntry> Scenario::immigration() const {
  std::vector<ImmigrationEntry> out;
  for (std::size_t k = 0; k < immigration_times.size(); ++k) {
    const double a = immigration_increments.at(k);
    const bool c = immigration_contender.empty() || immigration_contender[k];
    out.push_back({immigration_times[k], c ? a : 0.0, a});
  }
  return out;
}

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    s.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace pitsim
