#include "optoatp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "optoatp/error.hpp"

namespace optoatp::io {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based file line of each row
};

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " cells, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw DataError(path.string() + ": empty file");
  return t;
}

std::optional<double> parse_cell(const std::string& cell, const std::filesystem::path& path,
                                 std::size_t line_no, const std::string& column) {
  if (cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan") return std::nullopt;
  double v = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": column '" + column +
                    "' has invalid number '" + cell + "'");
  }
  return v;
}

double require_cell(const std::string& cell, const std::filesystem::path& path, std::size_t line_no,
                    const std::string& column) {
  const auto v = parse_cell(cell, path, line_no, column);
  if (!v) throw DataError(path.string() + ":" + std::to_string(line_no) + ": column '" + column + "' is empty");
  return *v;
}

std::map<std::string, std::size_t> index_columns(const Table& t, const std::vector<std::string>& known,
                                                 const std::filesystem::path& path) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const std::string& name = t.header[i];
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw DataError(path.string() + ": unknown column '" + name + "'");
    if (!idx.emplace(name, i).second) throw DataError(path.string() + ": duplicate column '" + name + "'");
  }
  return idx;
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string opt_cell(const std::optional<double>& v) { return v ? fmt(*v, 12) : std::string(); }

}  // namespace

BatchDataset load_batch_csv(const std::filesystem::path& path, const BatchCsvOptions& options) {
  const Table t = read_table(path);
  const auto cols = index_columns(
      t, {"t_h", "s_G_gpl", "B_c_gpl", "p_L_gpl", "u_umol_m2_s", "E_VU_g"}, path);
  if (!cols.count("t_h")) throw DataError(path.string() + ": missing column 't_h'");
  if (t.rows.empty()) throw DataError(path.string() + ": no data rows");

  BatchDataset data;
  data.id = path.stem().string();
  std::vector<double> light;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    Sample s;
    s.t = require_cell(row[cols.at("t_h")], path, line, "t_h");
    if (!data.samples.empty() && !(s.t > data.samples.back().t)) {
      std::ostringstream os;
      os << path.string() << ":" << line << ": time " << s.t << " h does not increase (row " << r + 1 << ")";
      throw DataError(os.str());
    }
    auto get = [&](const char* name) -> std::optional<double> {
      const auto it = cols.find(name);
      return it == cols.end() ? std::nullopt : parse_cell(row[it->second], path, line, name);
    };
    s.glucose = get("s_G_gpl");
    s.biomass = get("B_c_gpl");
    s.lactate = get("p_L_gpl");
    if (!s.any_observed()) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": row has no observed state");
    }
    if (cols.count("u_umol_m2_s")) light.push_back(require_cell(row[cols.at("u_umol_m2_s")], path, line, "u_umol_m2_s"));
    data.samples.push_back(s);
  }

  const Sample& first = data.samples.front();
  if (!first.fully_observed()) {
    throw DataError(path.string() + ": first row must observe s_G, B_c and p_L (initial state)");
  }
  data.initial_state = {*first.biomass, 0.0, *first.glucose, *first.lactate};

  const double t0 = first.t;
  const double tf = data.samples.back().t;
  if (!(tf > t0)) throw DataError(path.string() + ": batch needs at least two distinct times");
  if (options.schedule_path) {
    data.schedule = load_schedule_csv(*options.schedule_path, tf);
    if (std::abs(data.schedule.t0 - t0) > 1e-9)
      throw DataError(options.schedule_path->string() + ": schedule must start at the first sample time");
  } else if (!light.empty()) {
    data.schedule = ControlSchedule::constant(t0, tf, options.interval_width, 0.0);
    for (std::size_t j = 0; j < data.schedule.levels.size(); ++j) {
      const double start = data.schedule.interval_start(j);
      std::size_t k = 0;
      for (std::size_t r = 0; r < data.samples.size(); ++r)
        if (data.samples[r].t <= start + 1e-9) k = r;
      data.schedule.levels[j] = light[k];
    }
  } else if (options.require_schedule) {
    throw DataError(path.string() + ": no light schedule (give a schedule file or a u_umol_m2_s column)");
  } else {
    data.schedule = ControlSchedule::constant(t0, tf, tf - t0, 0.0);
  }
  data.validate();
  return data;
}

ControlSchedule load_schedule_csv(const std::filesystem::path& path, double tf) {
  const Table t = read_table(path);
  const auto cols = index_columns(t, {"interval_start_h", "u_umol_m2_s"}, path);
  if (cols.size() != 2) throw DataError(path.string() + ": need interval_start_h and u_umol_m2_s columns");
  if (t.rows.empty()) throw DataError(path.string() + ": no intervals");
  std::vector<double> starts, levels;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = t.line_numbers[r];
    starts.push_back(require_cell(t.rows[r][cols.at("interval_start_h")], path, line, "interval_start_h"));
    levels.push_back(require_cell(t.rows[r][cols.at("u_umol_m2_s")], path, line, "u_umol_m2_s"));
    if (r > 0 && !(starts[r] > starts[r - 1]))
      throw DataError(path.string() + ":" + std::to_string(line) + ": interval start does not increase");
  }
  ControlSchedule s;
  s.t0 = starts.front();
  s.tf = tf;
  s.interval_width = starts.size() > 1 ? starts[1] - starts[0] : tf - s.t0;
  for (std::size_t r = 1; r < starts.size(); ++r) {
    if (std::abs(starts[r] - s.interval_start(r)) > 1e-9)
      throw DataError(path.string() + ":" + std::to_string(t.line_numbers[r]) + ": intervals are not evenly spaced");
  }
  s.levels = std::move(levels);
  try {
    s.validate(std::numeric_limits<double>::infinity());
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return s;
}

void write_batch_csv(const std::filesystem::path& path, const BatchDataset& data) {
  auto out = open_out(path);
  out << "t_h,s_G_gpl,B_c_gpl,p_L_gpl,u_umol_m2_s\n";
  for (const Sample& s : data.samples) {
    out << fmt(s.t, 12) << ',' << opt_cell(s.glucose) << ',' << opt_cell(s.biomass) << ','
        << opt_cell(s.lactate) << ',' << fmt(data.schedule.level_at(s.t), 12) << '\n';
  }
}

void write_schedule_csv(const std::filesystem::path& path, const ControlSchedule& schedule) {
  auto out = open_out(path);
  out << "interval_start_h,u_umol_m2_s\n";
  for (std::size_t j = 0; j < schedule.levels.size(); ++j) {
    out << fmt(schedule.interval_start(j), 12) << ',' << fmt(schedule.levels[j], 12) << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj, double every) {
  auto out = open_out(path);
  out << "t_h,s_G_gpl,B_c_gpl,p_L_gpl,E_VU_g,u_umol_m2_s\n";
  const double t0 = traj.times.empty() ? 0.0 : traj.times.front();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (every > 0.0 && i + 1 != traj.times.size()) {
      const double k = (t - t0) / every;
      if (std::abs(k - std::round(k)) > 1e-6) continue;
    }
    const State& x = traj.states[i];
    out << fmt(t, 12) << ',' << fmt(x.glucose, 12) << ',' << fmt(x.biomass, 12) << ','
        << fmt(x.lactate, 12) << ',' << fmt(x.atpase, 12) << ',' << fmt(traj.light_at_sample(i), 12)
        << '\n';
  }
}

void write_residuals_csv(const std::filesystem::path& path, std::span<const ResidualSample> samples) {
  auto out = open_out(path);
  out << "t,s_G,B_c,p_L,E,u_l,w_G,w_c,w_L\n";
  for (const ResidualSample& r : samples) {
    out << fmt(r.t, 17) << ',' << fmt(r.glucose, 17) << ',' << fmt(r.biomass, 17) << ','
        << fmt(r.lactate, 17) << ',' << fmt(r.atpase, 17) << ',' << fmt(r.light, 17) << ','
        << fmt(r.w_glucose, 17) << ',' << fmt(r.w_biomass, 17) << ',' << fmt(r.w_lactate, 17) << '\n';
  }
}

std::vector<ResidualSample> read_residuals_csv(const std::filesystem::path& path) {
  const Table t = read_table(path);
  const std::vector<std::string> names = {"t", "s_G", "B_c", "p_L", "E", "u_l", "w_G", "w_c", "w_L"};
  const auto cols = index_columns(t, names, path);
  for (const auto& n : names)
    if (!cols.count(n)) throw DataError(path.string() + ": missing column '" + n + "'");
  std::vector<ResidualSample> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = t.line_numbers[r];
    auto get = [&](const std::string& n) { return require_cell(t.rows[r][cols.at(n)], path, line, n); };
    out.push_back({get("t"), get("s_G"), get("B_c"), get("p_L"), get("E"), get("u_l"), get("w_G"),
                   get("w_c"), get("w_L")});
  }
  return out;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json to_json(const State& x) {
  return {{"B_c", x.biomass}, {"E", x.atpase}, {"s_G", x.glucose}, {"p_L", x.lactate}};
}

State state_from_json(const nlohmann::json& j) {
  try {
    State x{j.at("B_c").get<double>(), j.value("E", 0.0), j.at("s_G").get<double>(), j.value("p_L", 0.0)};
    if (!x.finite()) throw ConfigError("initial state is not finite");
    return x;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed state: ") + e.what());
  }
}

nlohmann::json to_json(const ControlSchedule& s) {
  return {{"t0_h", s.t0}, {"tf_h", s.tf}, {"interval_width_h", s.interval_width}, {"levels", s.levels}};
}

ControlSchedule schedule_from_json(const nlohmann::json& j) {
  try {
    ControlSchedule s;
    s.t0 = j.value("t0_h", 0.0);
    s.tf = j.at("tf_h").get<double>();
    s.interval_width = j.value("interval_width_h", 1.0);
    if (j.contains("constant_light")) {
      s = ControlSchedule::constant(s.t0, s.tf, s.interval_width, j["constant_light"].get<double>());
    } else {
      s.levels = j.at("levels").get<std::vector<double>>();
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed schedule: ") + e.what());
  }
}

nlohmann::json to_json(const BatchMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"Y_LG_batch", opt(m.lactate_on_glucose)},
          {"Y_BG_batch", opt(m.biomass_on_glucose)},
          {"r_L_batch", m.lactate_productivity},
          {"yields_defined", m.yields_defined()}};
}

}  // namespace optoatp::io
