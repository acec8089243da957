#include "traceinv/io.hpp"

#include "traceinv/errors.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace traceinv {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::string metadata_line(std::uint64_t seed, std::uint64_t config_hash) {
  std::ostringstream os;
  os << "# traceinv " << kVersion << " seed=" << seed << " config_hash=" << std::hex << std::setw(16)
     << std::setfill('0') << config_hash;
  return os.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  return os;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(trim(f));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_input(const std::filesystem::path& path, bool binary = false) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  return is;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is = open_input(path);
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    const std::string l = trim(line);
    if (l.empty() || l[0] == '#') continue;
    auto fields = split_fields(l);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      fail(ErrorKind::Io, path.string() + ": row with " + std::to_string(fields.size()) + " fields, header has " +
                              std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) fail(ErrorKind::Io, path.string() + ": no header line");
  return t;
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  fail(ErrorKind::Io, "missing column '" + name + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row).at(col);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(ErrorKind::Io, "not a number: '" + s + "' (row " + std::to_string(row + 1) + ")");
  return v;
}

long CsvTable::integer(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row).at(col);
  long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(ErrorKind::Io, "not an integer: '" + s + "' (row " + std::to_string(row + 1) + ")");
  return v;
}

namespace {

SpatialGrid grid_from_table(const CsvTable& t, const std::filesystem::path& path) {
  const std::size_t cid = t.column("id");
  const std::size_t c1 = t.column("coord1");
  const bool two_d = t.has_column("coord2");
  const std::size_t c2 = two_d ? t.column("coord2") : 0;
  const std::size_t ca = t.column("area");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  if (n == 0) fail(ErrorKind::Io, path.string() + ": empty grid");
  Eigen::MatrixXd cent(n, two_d ? 2 : 1);
  Eigen::VectorXd area(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    if (t.integer(r, cid) != i) fail(ErrorKind::Io, path.string() + ": cell ids must be dense 0..n-1 in order");
    cent(i, 0) = t.number(r, c1);
    if (two_d) cent(i, 1) = t.number(r, c2);
    area[i] = t.number(r, ca);
  }
  return SpatialGrid(cent, area);
}

void write_grid_rows(std::ostream& os, const SpatialGrid& g, const Eigen::VectorXd* extra) {
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    os << i;
    for (Eigen::Index d = 0; d < g.dim(); ++d) os << ',' << g.centroids()(i, d);
    os << ',' << g.area(i);
    if (extra) os << ',' << (*extra)[i];
    os << '\n';
  }
}

std::string grid_header(const SpatialGrid& g) { return g.dim() == 2 ? "id,coord1,coord2,area" : "id,coord1,area"; }

}  // namespace

SpatialGrid read_grid_csv(const std::filesystem::path& path) { return grid_from_table(read_csv(path), path); }

void write_grid_csv(const std::filesystem::path& path, const SpatialGrid& grid, const std::string& meta) {
  auto os = open_output(path);
  os << meta << '\n' << grid_header(grid) << '\n';
  write_grid_rows(os, grid, nullptr);
}

Inventory read_inventory_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  Inventory inv;
  inv.grid = grid_from_table(t, path);
  const std::size_t c = t.column("total_flux_g_per_s");
  inv.totals.resize(inv.grid.size());
  for (Eigen::Index i = 0; i < inv.grid.size(); ++i) inv.totals[i] = t.number(static_cast<std::size_t>(i), c);
  return inv;
}

void write_inventory_csv(const std::filesystem::path& path, const Inventory& inv, const std::string& meta) {
  auto os = open_output(path);
  os << meta << '\n' << grid_header(inv.grid) << ",total_flux_g_per_s\n";
  write_grid_rows(os, inv.grid, &inv.totals);
}

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(ErrorKind::Io, path.string() + ": truncated file");
  return v;
}

void put_doubles(std::ostream& os, const double* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_doubles(std::istream& is, double* p, std::size_t n, const std::filesystem::path& path) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) fail(ErrorKind::Io, path.string() + ": truncated data block");
}

void check_magic(std::istream& is, const char* magic, const std::filesystem::path& path) {
  char m[4];
  is.read(m, 4);
  if (!is || std::memcmp(m, magic, 4) != 0) fail(ErrorKind::Io, path.string() + ": bad magic, expected " + magic);
}

}  // namespace

void write_srr_binary(const std::filesystem::path& path, const SrrTensor& srr) {
  auto os = open_output(path);
  os.write("SRR1", 4);
  put<std::int64_t>(os, srr.n_steps());
  put<std::int64_t>(os, srr.n_sites());
  put<std::int64_t>(os, srr.n_cells());
  put<std::uint8_t>(os, srr.area_weighted() ? 1 : 0);
  put_doubles(os, srr.values().data(), srr.values().size());
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

SrrTensor read_srr_binary(const std::filesystem::path& path) {
  auto is = open_input(path, true);
  check_magic(is, "SRR1", path);
  const auto t = get<std::int64_t>(is, path);
  const auto s = get<std::int64_t>(is, path);
  const auto u = get<std::int64_t>(is, path);
  const auto flag = get<std::uint8_t>(is, path);
  if (t < 1 || s < 1 || u < 1) fail(ErrorKind::Io, path.string() + ": invalid SRR dimensions");
  std::vector<double> v(static_cast<std::size_t>(t * s * u));
  get_doubles(is, v.data(), v.size(), path);
  SrrTensor srr(t, s, u, std::move(v), flag != 0);
  srr.validate();
  return srr;
}

SrrTensor read_srr_csv(const std::filesystem::path& path, Eigen::Index n_steps, Eigen::Index n_sites,
                       Eigen::Index n_cells) {
  const CsvTable tab = read_csv(path);
  const std::size_t ct = tab.column("t"), cs = tab.column("s_index"), cu = tab.column("u_index"),
                    cv = tab.column("value");
  SrrTensor srr(n_steps, n_sites, n_cells);
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const long t = tab.integer(r, ct), s = tab.integer(r, cs), u = tab.integer(r, cu);
    if (t < 0 || t >= n_steps || s < 0 || s >= n_sites || u < 0 || u >= n_cells)
      fail(ErrorKind::DimensionMismatch, path.string() + ": index out of range on row " + std::to_string(r + 1));
    srr.at(t, s, u) = tab.number(r, cv);
  }
  srr.validate();
  return srr;
}

void write_chain_binary(const std::filesystem::path& path, const PosteriorChain& chain) {
  auto os = open_output(path);
  os.write("CHN1", 4);
  const Eigen::Index n = chain.flux.rows();
  put<std::int64_t>(os, n);
  put<std::int64_t>(os, chain.flux.cols());
  put<std::int64_t>(os, chain.mole.rows() == n ? chain.mole.cols() : 0);
  put<double>(os, chain.acceptance_rate);
  put<std::int64_t>(os, chain.leapfrog_steps);
  put<double>(os, chain.step_low);
  put<double>(os, chain.step_high);
  put<std::int64_t>(os, chain.n_burnin);
  put<std::int64_t>(os, chain.divergences);
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor f = chain.flux;
  put_doubles(os, f.data(), static_cast<std::size_t>(f.size()));
  put_doubles(os, chain.log_density.data(), static_cast<std::size_t>(chain.log_density.size()));
  if (chain.mole.rows() == n && chain.mole.cols() > 0) {
    const RowMajor m = chain.mole;
    put_doubles(os, m.data(), static_cast<std::size_t>(m.size()));
  }
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

PosteriorChain read_chain_binary(const std::filesystem::path& path) {
  auto is = open_input(path, true);
  check_magic(is, "CHN1", path);
  const auto n = get<std::int64_t>(is, path);
  const auto nf = get<std::int64_t>(is, path);
  const auto nm = get<std::int64_t>(is, path);
  if (n < 0 || nf < 0 || nm < 0) fail(ErrorKind::Io, path.string() + ": invalid chain dimensions");
  PosteriorChain c;
  c.acceptance_rate = get<double>(is, path);
  c.leapfrog_steps = static_cast<int>(get<std::int64_t>(is, path));
  c.step_low = get<double>(is, path);
  c.step_high = get<double>(is, path);
  c.n_burnin = static_cast<int>(get<std::int64_t>(is, path));
  c.divergences = static_cast<int>(get<std::int64_t>(is, path));
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor f(n, nf);
  get_doubles(is, f.data(), static_cast<std::size_t>(f.size()), path);
  c.flux = f;
  c.log_density.resize(n);
  get_doubles(is, c.log_density.data(), static_cast<std::size_t>(n), path);
  if (nm > 0) {
    RowMajor m(n, nm);
    get_doubles(is, m.data(), static_cast<std::size_t>(m.size()), path);
    c.mole = m;
  }
  return c;
}

}  // namespace traceinv
