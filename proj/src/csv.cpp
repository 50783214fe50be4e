#include "chainctl/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace chainctl {

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double out = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // no \r\n translation
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const Index n = traj.n_agents();
  out << "step,tau,t,norm2,mean,maxabs";
  const bool states = n <= 64;
  if (states)
    for (Index j = 1; j <= n; ++j) out << ",y_" << j;
  out << "\n";
  for (std::size_t i = 0; i < traj.stored_steps.size(); ++i) {
    const int k = traj.stored_steps[i];
    out << k << ',' << format_double(traj.tau_of_step(k)) << ','
        << format_double(traj.t_of_step(k)) << ','
        << format_double(traj.norm2[k]) << ',' << format_double(traj.mean[k])
        << ',' << format_double(traj.maxabs[k]);
    if (states)
      for (Index j = 0; j < n; ++j)
        out << ',' << format_double(traj.states(j, static_cast<Index>(i)));
    out << "\n";
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto out = open_out(path);
  write_trajectory_csv(out, traj);
}

void write_control_csv(std::ostream& out, const ControlSignal& signal) {
  out << "step,tau";
  for (int c = 1; c <= signal.n_channels; ++c) out << ",u_" << c;
  out << "\n";
  const double to_tau =
      signal.frame.frame == Frame::Rescaled ? 1.0 : 1.0 / signal.frame.n_squared();
  for (int k = 0; k <= signal.n_steps; ++k) {
    out << k << ',' << format_double(signal.frame.knot(k, signal.n_steps) * to_tau);
    const VectorXd u = signal.knot_values(k);
    for (int c = 0; c < signal.n_channels; ++c)
      out << ',' << format_double(u[c]);
    out << "\n";
  }
}

void write_control_csv(const std::string& path, const ControlSignal& signal) {
  auto out = open_out(path);
  write_control_csv(out, signal);
}

ControlSignal read_control_csv(const std::string& path, const TimeFrame& frame) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("control CSV '" + path + "' is empty");
  const auto header = split_row(line);
  if (header.size() < 3 || header[0] != "step" || header[1] != "tau")
    throw std::invalid_argument("control CSV '" + path + "' has a bad header");
  const int channels = static_cast<int>(header.size()) - 2;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (static_cast<int>(cells.size()) != channels + 2)
      throw std::invalid_argument("control CSV row width mismatch");
    std::vector<double> row(channels);
    for (int c = 0; c < channels; ++c) row[c] = parse_double(cells[c + 2]);
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2)
    throw std::invalid_argument("control CSV needs at least 2 knots");
  MatrixXd values(channels, rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (int c = 0; c < channels; ++c) values(c, static_cast<Index>(k)) = rows[k][c];
  return make_control_signal(frame, std::move(values));
}

namespace {
constexpr const char* kSweepHeader =
    "N,regime,horizon_mode,base_T,terminal_norm,cost_physical,cost_rescaled,"
    "iterations,converged,runtime_ms,status";
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << kSweepHeader << "\n";
  for (const auto& r : records) {
    out << r.n << ',' << to_string(r.regime) << ',' << to_string(r.horizon_mode)
        << ',' << format_double(r.base_T) << ','
        << format_double(r.terminal_norm) << ','
        << format_double(r.cost_physical) << ','
        << format_double(r.cost_rescaled) << ',' << r.iterations << ','
        << (r.converged ? "true" : "false") << ',' << r.runtime_ms << ','
        << r.status << "\n";
  }
}

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepRecord>& records) {
  auto out = open_out(path);
  write_sweep_csv(out, records);
}

std::vector<SweepRecord> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader)
    throw std::invalid_argument("sweep CSV '" + path + "' has a bad header");
  std::vector<SweepRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != 11)
      throw std::invalid_argument("sweep CSV row width mismatch");
    SweepRecord r;
    r.n = static_cast<int>(parse_double(cells[0]));
    if (cells[1] == "inv-n2") r.regime = Scaling::InverseNSquared;
    else if (cells[1] == "inv-n") r.regime = Scaling::InverseN;
    else if (cells[1] == "unscaled") r.regime = Scaling::Unscaled;
    else throw std::invalid_argument("bad regime '" + cells[1] + "'");
    if (cells[2] == "grow-n2") r.horizon_mode = HorizonMode::TimeGrowsAsN2;
    else if (cells[2] == "fixed-t") r.horizon_mode = HorizonMode::FixedT;
    else throw std::invalid_argument("bad horizon_mode '" + cells[2] + "'");
    r.base_T = parse_double(cells[3]);
    r.terminal_norm = parse_double(cells[4]);
    r.cost_physical = parse_double(cells[5]);
    r.cost_rescaled = parse_double(cells[6]);
    r.iterations = static_cast<int>(parse_double(cells[7]));
    r.converged = cells[8] == "true";
    r.runtime_ms = static_cast<long>(parse_double(cells[9]));
    r.status = cells[10];
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace chainctl
