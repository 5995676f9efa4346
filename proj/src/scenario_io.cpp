#include "stlgame/scenario_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "stlgame/numfmt.hpp"
#include "stlgame/parser.hpp"

namespace stlgame::dyn {

namespace {

using nlohmann::json;

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw InputError(std::string("scenario is missing field '") + key + "'");
  return *it;
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw InputError("'" + where + "' must be a number");
  return j.get<double>();
}

Eigen::VectorXd as_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError("'" + where + "' must be an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = as_number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

// Row-major array of arrays. [] denotes a matrix with `rows_hint` rows and
// zero columns (used for B_F in single-agent scenarios).
Eigen::MatrixXd as_matrix(const json& j, const std::string& where, Eigen::Index rows_hint) {
  if (!j.is_array()) throw InputError("'" + where + "' must be an array of arrays");
  if (j.empty()) return Eigen::MatrixXd(rows_hint, 0);
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw InputError("'" + where + "' must be an array of arrays");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw InputError("'" + where + "' is not rectangular at row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_number(j[r][c], where + "[" + std::to_string(r) + "]");
    }
  }
  return m;
}

BoundsBox as_box(const json& j, const std::string& where) {
  if (!j.is_object()) throw InputError("'" + where + "' must be {lower, upper}");
  BoundsBox box;
  box.lower = as_vector(field(j, "lower"), where + ".lower");
  box.upper = as_vector(field(j, "upper"), where + ".upper");
  return box;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("scenario must be a JSON object");

  Scenario sc;
  const json& names = field(j, "state_names");
  if (!names.is_array()) throw InputError("'state_names' must be an array of strings");
  for (const auto& s : names) {
    if (!s.is_string()) throw InputError("'state_names' must be an array of strings");
    sc.state_names.push_back(s.get<std::string>());
    if (stl::is_reserved_word(sc.state_names.back())) {
      throw InputError("state name '" + sc.state_names.back() + "' is a reserved word");
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(sc.state_names.size());

  sc.system.A = as_matrix(field(j, "A"), "A", n);
  sc.system.B_L = as_matrix(field(j, "B_L"), "B_L", n);
  sc.system.B_F = as_matrix(field(j, "B_F"), "B_F", n);
  sc.system.c = j.contains("c") ? as_vector(j["c"], "c") : Eigen::VectorXd::Zero(n).eval();
  sc.x0 = as_vector(field(j, "x0"), "x0");

  const json& horizon = field(j, "N");
  if (!horizon.is_number_integer()) throw InputError("'N' must be an integer");
  sc.N = horizon.get<int>();

  sc.state_bounds = as_box(field(j, "state_bounds"), "state_bounds");
  sc.leader_bounds = as_box(field(j, "leader_bounds"), "leader_bounds");
  sc.follower_bounds = as_box(field(j, "follower_bounds"), "follower_bounds");

  const json& phiL = field(j, "phi_L");
  const json& phiF = field(j, "phi_F");
  if (!phiL.is_string() || !phiF.is_string()) {
    throw InputError("'phi_L' and 'phi_F' must be formula strings");
  }
  sc.phi_L = stl::parse_formula(phiL.get<std::string>(), sc.state_names);
  sc.phi_F = stl::parse_formula(phiF.get<std::string>(), sc.state_names);

  const json& cost = field(j, "cost");
  if (!cost.is_object()) throw InputError("'cost' must be an object");
  sc.cost.effort_weight = as_number(field(cost, "effort_weight"), "cost.effort_weight");
  const json& norm = field(cost, "effort_norm");
  if (norm.is_string() && norm.get<std::string>() == "squared_pwl") {
    sc.cost.norm = EffortNorm::SquaredPwl;
  } else if (norm.is_string() && norm.get<std::string>() == "l1") {
    sc.cost.norm = EffortNorm::L1;
  } else {
    throw InputError("'cost.effort_norm' must be \"squared_pwl\" or \"l1\"");
  }
  if (cost.contains("pwl_segments")) {
    const json& seg = cost["pwl_segments"];
    if (!seg.is_number_integer()) throw InputError("'cost.pwl_segments' must be an integer");
    sc.cost.pwl_segments = seg.get<int>();
  }
  const json& irl = field(cost, "include_leader_robustness");
  if (!irl.is_boolean()) throw InputError("'cost.include_leader_robustness' must be a boolean");
  sc.cost.include_leader_robustness = irl.get<bool>();

  if (j.contains("noninterfering_input")) {
    const json& ni = j["noninterfering_input"];
    if (!ni.is_array()) throw InputError("'noninterfering_input' must be an array of arrays");
    for (std::size_t t = 0; t < ni.size(); ++t) {
      sc.noninterfering.push_back(
          as_vector(ni[t], "noninterfering_input[" + std::to_string(t) + "]"));
    }
  }

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const int N = static_cast<int>(traj.u_L.size());
  const Eigen::Index n = traj.states.states.empty() ? 0 : traj.states.states[0].size();
  const Eigen::Index mL = traj.u_L.empty() ? 0 : traj.u_L[0].size();
  const Eigen::Index mF = traj.u_F.empty() ? 0 : traj.u_F[0].size();

  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < mL; ++i) out << ",uL_" << i;
  for (Eigen::Index i = 0; i < mF; ++i) out << ",uF_" << i;
  out << "\n";

  for (int t = 0; t < traj.states.length(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < n; ++i) out << "," << format_double(traj.states.states[t][i]);
    const bool has_input = t < N;
    for (Eigen::Index i = 0; i < mL; ++i) {
      out << ",";
      if (has_input) out << format_double(traj.u_L[t][i]);
    }
    for (Eigen::Index i = 0; i < mF; ++i) {
      out << ",";
      if (has_input) out << format_double(traj.u_F[t][i]);
    }
    out << "\n";
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

CsvTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("trace CSV is empty");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t") {
    throw InputError("trace CSV header must start with 't'");
  }
  int n = 0, mL = 0, mF = 0;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h.rfind("x_", 0) == 0) {
      ++n;
    } else if (h.rfind("uL_", 0) == 0) {
      ++mL;
    } else if (h.rfind("uF_", 0) == 0) {
      ++mF;
    } else {
      throw InputError("unrecognized trace CSV column '" + h + "'");
    }
  }
  if (n == 0) throw InputError("trace CSV has no state columns");

  CsvTrace result;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != 1 + n + mL + mF) {
      throw InputError("trace CSV row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(1 + n + mL + mF));
    }
    auto cell_value = [&](int idx, const char* what) {
      const std::string& s = cells[static_cast<std::size_t>(idx)];
      try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw InputError("trace CSV row " + std::to_string(row) + ": bad " + what +
                         " value '" + s + "'");
      }
    };
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = cell_value(1 + i, "state");
    result.states.states.push_back(std::move(x));

    const bool inputs_blank = mL + mF > 0 && cells[static_cast<std::size_t>(1 + n)].empty();
    if (!inputs_blank && mL + mF > 0) {
      Eigen::VectorXd uL(mL), uF(mF);
      for (int i = 0; i < mL; ++i) uL[i] = cell_value(1 + n + i, "leader input");
      for (int i = 0; i < mF; ++i) uF[i] = cell_value(1 + n + mL + i, "follower input");
      result.u_L.push_back(std::move(uL));
      result.u_F.push_back(std::move(uF));
    }
    ++row;
  }
  if (result.states.states.empty()) throw InputError("trace CSV has no data rows");
  return result;
}

}  // namespace stlgame::dyn
