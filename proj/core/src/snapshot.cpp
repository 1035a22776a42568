#include "polyflow/snapshot.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "polyflow/error.hpp"

namespace polyflow {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'S', 'N', 'A', 'P', '1', '\n'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t get_u64(const unsigned char* bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[i]) << (8 * i);
  return v;
}

// Row-major (point-major) dump of a column-major Eigen matrix.
void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
}

Eigen::MatrixXd get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols,
                           const std::string& path) {
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows * cols) * 8);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw IoError(path + ": truncated field data");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = std::bit_cast<double>(get_u64(&buf[static_cast<std::size_t>(r * cols + c) * 8]));
  return m;
}

std::string potential_tag(const Potential& p) {
  return p.kind() == PotentialKind::kHookean ? "hookean" : "fene";
}

}  // namespace

SnapshotMeta SnapshotMeta::describe(const FlowState& s, const TorusGrid& grid, const QBasis& b) {
  SnapshotMeta m;
  m.dim_x = grid.dim();
  m.n = grid.points_per_dim();
  m.length = grid.length();
  m.potential = potential_tag(b.potential());
  m.dim_q = b.dim_q();
  m.n_q = b.degree();
  m.basis_size = b.size();
  m.thermal_scale = b.thermal_scale();
  m.stiffness = b.potential().stiffness();
  m.max_extension = b.potential().max_extension();
  m.t = s.t;
  return m;
}

void write_snapshot(const std::string& path, const FlowState& s, const TorusGrid& grid,
                    const QBasis& b) {
  s.check_shape(grid, b);
  const SnapshotMeta m = SnapshotMeta::describe(s, grid, b);
  const nlohmann::json header = {
      {"dtype", "f64le"},
      {"order", "row-major"},
      {"grid", {{"dim_x", m.dim_x}, {"n", m.n}, {"length", m.length}}},
      {"basis",
       {{"potential", m.potential},
        {"dim_q", m.dim_q},
        {"n_q", m.n_q},
        {"size", m.basis_size},
        {"thermal_scale", m.thermal_scale},
        {"stiffness", m.stiffness},
        {"max_extension", m.max_extension}}},
      {"t", m.t},
      {"fields",
       nlohmann::json::array({{{"name", "rho"}, {"shape", {grid.size()}}},
                              {{"name", "u"}, {"shape", {grid.size(), grid.dim()}}},
                              {{"name", "g"}, {"shape", {grid.size(), b.size()}}}})}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open snapshot for writing: " + path);
  out.write(kMagic, 8);
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_matrix(out, s.rho);
  put_matrix(out, s.u);
  put_matrix(out, s.g);
  if (!out) throw IoError("write failed: " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot: " + path);
  char magic[8];
  unsigned char len[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError(path + ": not a polyflow snapshot");
  in.read(reinterpret_cast<char*>(len), 8);
  const std::uint64_t n = get_u64(len);
  if (in.gcount() != 8 || n > (1u << 20)) throw IoError(path + ": bad header length");
  std::string text(n, '\0');
  in.read(text.data(), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw IoError(path + ": truncated header");

  Snapshot snap;
  try {
    const nlohmann::json h = nlohmann::json::parse(text);
    if (h.at("dtype") != "f64le") throw IoError(path + ": unsupported dtype");
    SnapshotMeta& m = snap.meta;
    m.dim_x = h.at("grid").at("dim_x");
    m.n = h.at("grid").at("n");
    m.length = h.at("grid").at("length");
    const auto& b = h.at("basis");
    m.potential = b.at("potential");
    m.dim_q = b.at("dim_q");
    m.n_q = b.at("n_q");
    m.basis_size = b.at("size");
    m.thermal_scale = b.at("thermal_scale");
    m.stiffness = b.at("stiffness");
    m.max_extension = b.at("max_extension");
    m.t = h.at("t");
    if (m.dim_x < 1 || m.dim_x > 3 || m.n < 1 || m.basis_size < 1)
      throw IoError(path + ": inconsistent header");
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": malformed header: " + e.what());
  }
  const SnapshotMeta& m = snap.meta;
  const Eigen::Index points = static_cast<Eigen::Index>(std::pow(m.n, m.dim_x));
  snap.state.rho = get_matrix(in, points, 1, path);
  snap.state.u = get_matrix(in, points, m.dim_x, path);
  snap.state.g = get_matrix(in, points, m.basis_size, path);
  snap.state.t = m.t;
  return snap;
}

FlowState load_snapshot(const std::string& path, const TorusGrid& grid, const QBasis& b) {
  Snapshot snap = read_snapshot(path);
  const SnapshotMeta want = SnapshotMeta::describe(snap.state, grid, b);
  const SnapshotMeta& got = snap.meta;
  const auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); };
  if (got.dim_x != want.dim_x || got.n != want.n || !close(got.length, want.length))
    throw ParameterError(path + ": snapshot grid does not match the configured grid");
  if (got.potential != want.potential || got.dim_q != want.dim_q || got.n_q != want.n_q ||
      got.basis_size != want.basis_size || !close(got.thermal_scale, want.thermal_scale) ||
      !close(got.stiffness, want.stiffness) || !close(got.max_extension, want.max_extension))
    throw ParameterError(path + ": snapshot basis does not match the configured basis");
  return snap.state;
}

}  // namespace polyflow
