#include "fdpband/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace fdpband {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) throw data_error("failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw data_error("failed renaming '" + tmp + "' to '" + path + "'");
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;    // parsed numeric cells
  std::map<std::string, std::string> meta;  // "# key=value" comments
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        auto key = body.substr(0, eq);
        auto value = body.substr(eq + 1);
        const auto strip = [](std::string s) {
          const auto b = s.find_first_not_of(" \t\r");
          const auto e = s.find_last_not_of(" \t\r");
          return b == std::string::npos ? std::string()
                                        : s.substr(b, e - b + 1);
        };
        table.meta[strip(key)] = strip(value);
      }
      continue;
    }
    if (!have_header) {
      table.header = split_csv_line(line);
      have_header = true;
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != table.header.size())
      throw data_error(path + ": line " + std::to_string(line_no) +
                       ": expected " + std::to_string(table.header.size()) +
                       " columns, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        std::size_t pos = 0;
        row[c] = std::stod(cells[c], &pos);
        if (pos != cells[c].size()) throw std::invalid_argument(cells[c]);
      } catch (const std::exception&) {
        throw data_error(path + ": line " + std::to_string(line_no) +
                         ": cannot parse '" + cells[c] + "' in column '" +
                         table.header[c] + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw data_error(path + ": missing header line");
  return table;
}

std::size_t column_index(const CsvTable& table, const std::string& name,
                         const std::string& path) {
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c] == name) return c;
  throw data_error(path + ": missing required column '" + name + "'");
}

bool has_column(const CsvTable& table, const std::string& name) {
  for (const auto& h : table.header)
    if (h == name) return true;
  return false;
}

}  // namespace

PValueVector read_pvalue_csv(const std::string& path, bool jitter_ties) {
  const auto table = read_csv(path);
  const std::size_t pc = column_index(table, "p", path);
  std::vector<double> p;
  p.reserve(table.rows.size());
  for (const auto& row : table.rows) p.push_back(row[pc]);

  std::optional<std::vector<std::uint8_t>> mask;
  if (has_column(table, "is_null")) {
    const std::size_t nc = column_index(table, "is_null", path);
    mask.emplace();
    for (const auto& row : table.rows)
      mask->push_back(row[nc] != 0.0 ? 1 : 0);
  }
  std::size_t n = 0;
  if (auto it = table.meta.find("n"); it != table.meta.end())
    n = static_cast<std::size_t>(std::stoull(it->second));
  return PValueVector::create(std::move(p), n, std::move(mask), jitter_ties);
}

void write_pvalue_csv(const std::string& path, const PValueVector& p) {
  std::ostringstream out;
  out << "# n=" << p.n << "\n";
  out << (p.null_mask ? "p,is_null\n" : "p\n");
  for (std::size_t j = 0; j < p.m(); ++j) {
    out << format_double(p.p[j]);
    if (p.null_mask) out << ',' << static_cast<int>((*p.null_mask)[j]);
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

FdpBoundCurve read_curve_csv(const std::string& path) {
  const auto table = read_csv(path);
  FdpBoundCurve curve;
  const std::size_t tc = column_index(table, "t", path);
  const std::size_t rc = column_index(table, "n_reject", path);
  const std::size_t nc = column_index(table, "bound_naive", path);
  const std::size_t fc = column_index(table, "bound_refined", path);
  const std::size_t cc = column_index(table, "bound_combined", path);
  const bool truth = has_column(table, "fdp_true");
  const std::size_t uc = truth ? column_index(table, "fdp_true", path) : 0;
  for (const auto& row : table.rows) {
    curve.eval_points.push_back(row[tc]);
    curve.rejections.push_back(static_cast<std::size_t>(row[rc]));
    curve.bound_naive.push_back(row[nc]);
    curve.bound_refined.push_back(row[fc]);
    curve.bound_combined.push_back(row[cc]);
    if (truth) curve.fdp_true.push_back(row[uc]);
  }
  if (auto it = table.meta.find("delta"); it != table.meta.end())
    curve.delta = std::stod(it->second);
  if (auto it = table.meta.find("mhat0"); it != table.meta.end())
    curve.mhat0 = static_cast<std::size_t>(std::stoull(it->second));
  return curve;
}

void write_curve_csv(const std::string& path, const FdpBoundCurve& curve) {
  std::ostringstream out;
  out << "# delta=" << format_double(curve.delta) << "\n";
  out << "# mhat0=" << curve.mhat0 << "\n";
  out << "t,n_reject,bound_naive,bound_refined,bound_combined";
  const bool truth = !curve.fdp_true.empty();
  if (truth) out << ",fdp_true";
  out << '\n';
  for (std::size_t i = 0; i < curve.eval_points.size(); ++i) {
    out << format_double(curve.eval_points[i]) << ',' << curve.rejections[i]
        << ',' << format_double(curve.bound_naive[i]) << ','
        << format_double(curve.bound_refined[i]) << ','
        << format_double(curve.bound_combined[i]);
    if (truth) out << ',' << format_double(curve.fdp_true[i]);
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

nlohmann::json curve_to_json(const FdpBoundCurve& curve) {
  nlohmann::json j;
  j["t"] = curve.eval_points;
  j["n_reject"] = curve.rejections;
  j["bound_naive"] = curve.bound_naive;
  j["bound_refined"] = curve.bound_refined;
  j["bound_combined"] = curve.bound_combined;
  if (!curve.fdp_true.empty()) j["fdp_true"] = curve.fdp_true;
  j["mhat0"] = curve.mhat0;
  j["delta"] = curve.delta;
  return j;
}

SelectionProblem read_selection_csvs(const std::string& calib_path,
                                     const std::string& test_path,
                                     std::uint64_t seed) {
  const auto calib = read_csv(calib_path);
  const auto test = read_csv(test_path);
  SelectionProblem problem;
  problem.seed = seed;

  const std::size_t cm = column_index(calib, "muhat", calib_path);
  const std::size_t cy = column_index(calib, "y", calib_path);
  const std::size_t cc = column_index(calib, "c", calib_path);
  for (const auto& row : calib.rows)
    problem.calib.push_back({row[cm], row[cy], row[cc]});

  const std::size_t tm = column_index(test, "muhat", test_path);
  const std::size_t tc = column_index(test, "c", test_path);
  const bool truth = has_column(test, "y_true");
  const std::size_t ty = truth ? column_index(test, "y_true", test_path) : 0;
  if (truth) problem.test_truth.emplace();
  for (const auto& row : test.rows) {
    problem.test.push_back({row[tm], row[tc]});
    if (truth) problem.test_truth->push_back(row[ty]);
  }
  problem.validate();
  return problem;
}

void write_selection_csvs(const std::string& calib_path,
                          const std::string& test_path,
                          const SelectionProblem& problem) {
  {
    std::ostringstream out;
    out << "muhat,y,c\n";
    for (const auto& p : problem.calib)
      out << format_double(p.mu_hat) << ',' << format_double(p.y) << ','
          << format_double(p.c) << '\n';
    write_text_atomic(calib_path, out.str());
  }
  {
    std::ostringstream out;
    out << (problem.test_truth ? "muhat,c,y_true\n" : "muhat,c\n");
    for (std::size_t j = 0; j < problem.m(); ++j) {
      out << format_double(problem.test[j].mu_hat) << ','
          << format_double(problem.test[j].c);
      if (problem.test_truth)
        out << ',' << format_double((*problem.test_truth)[j]);
      out << '\n';
    }
    write_text_atomic(test_path, out.str());
  }
}

}  // namespace fdpband
