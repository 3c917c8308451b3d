#include "implab/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "implab/family.hpp"
#include "implab/fatou.hpp"
#include "implab/implosion.hpp"
#include "implab/lavaurs.hpp"
#include "implab/normal_form.hpp"
#include "implab/parallel.hpp"

namespace implab::cli {

using nlohmann::json;

// ------------------------------------------------------------ plumbing

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // drop the sign of zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

Csv::Csv(std::vector<std::string> header) : header_(std::move(header)) {}

Csv& Csv::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw std::logic_error("csv row width does not match the header");
  body_.push_back(std::move(cells));
  return *this;
}

std::string Csv::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : body_) line(r);
  return out;
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n";
  for (const auto& c : img.comments) out += "# " + c + "\n";
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.pixels.size() * 3);
  for (const Rgb& p : img.pixels) {
    out += char(p.r);
    out += char(p.g);
    out += char(p.b);
  }
  return out;
}

Image decode_ppm(const std::string& bytes) {
  Image img;
  size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        const size_t eol = bytes.find('\n', pos);
        img.comments.push_back(bytes.substr(pos + 2, eol - pos - 2));
        pos = eol + 1;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (token() != "P6") throw InvalidInput("not a binary PPM");
  img.width = std::stoi(token());
  img.height = std::stoi(token());
  if (token() != "255") throw InvalidInput("PPM maxval must be 255");
  ++pos;  // single whitespace before the raster
  const size_t n = size_t(img.width) * img.height;
  if (bytes.size() < pos + 3 * n) throw InvalidInput("truncated PPM raster");
  img.pixels.resize(n);
  for (size_t i = 0; i < n; ++i)
    img.pixels[i] = {std::uint8_t(bytes[pos + 3 * i]), std::uint8_t(bytes[pos + 3 * i + 1]),
                     std::uint8_t(bytes[pos + 3 * i + 2])};
  return img;
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::filesystem::filesystem_error("cannot open for writing", tmp, std::make_error_code(std::errc::io_error));
    f.write(bytes.data(), std::streamsize(bytes.size()));
    f.flush();
    if (!f) throw std::filesystem::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
  }
  std::filesystem::rename(tmp, path);
}

Rgb log_error_color(double l) {
  // viridis anchors at t = 0, .25, .5, .75, 1
  static constexpr double stops[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  const double t = std::clamp((l + 12.0) / 12.0, 0.0, 1.0) * 4.0;
  const int k = std::min(3, int(t));
  const double u = t - k;
  auto mix = [&](int c) { return std::uint8_t(std::lround(stops[k][c] + u * (stops[k + 1][c] - stops[k][c]))); };
  return {mix(0), mix(1), mix(2)};
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"validate", "fixed-points", "fatou", "lavaurs",
                                          "implode",  "trace",        "curve", "render"};
  return s;
}

namespace {

std::string fmt(double v) { return format_double(v); }
std::string fmt(long v) { return std::to_string(v); }
std::string fmt(size_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }
void put(std::vector<std::string>& row, Complex z) {
  row.push_back(fmt(z.real()));
  row.push_back(fmt(z.imag()));
}
void put(std::vector<std::string>& row, const Point& z) {
  put(row, z(0));
  put(row, z(1));
}
std::vector<std::string> cols(const std::string& stem) { return {stem + "_re", stem + "_im"}; }
std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const Point kNaNPoint = Point::Constant(Complex(std::nan(""), std::nan("")));

bool nonconvergence(const std::string& failure) {
  for (const char* k : {"TailNotConverged", "NewtonDivergence", "ExtrapolationUnstable", "InverseBranchLost"})
    if (failure.rfind(k, 0) == 0) return true;
  return false;
}

struct Hypothesis : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Point point_from_json(const json& j) {
  if (j.is_array() && j.size() == 2) return Point(complex_from_json(j[0]), complex_from_json(j[1]));
  if (j.is_object()) return Point(complex_from_json(j.at("x")), complex_from_json(j.value("y", json(0.0))));
  throw InvalidInput("a point is [x, y] or {\"x\":..., \"y\":...}");
}

Orientation orientation_from(const std::string& s) {
  if (s == "incoming") return Orientation::incoming;
  if (s == "outgoing") return Orientation::outgoing;
  throw InvalidInput("orientation must be incoming or outgoing, got '" + s + "'");
}
const char* orientation_name(Orientation o) { return o == Orientation::incoming ? "incoming" : "outgoing"; }

struct Sample {
  Point z;
  Orientation o;
};

std::vector<Sample> samples_of(const json& spec, const FatouEngine& e, unsigned long long seed, Orientation dflt) {
  std::vector<Sample> out;
  if (spec.is_array()) {
    // either a list of specs or a list of points
    for (size_t i = 0; i < spec.size(); ++i) {
      if (spec[i].is_object() && spec[i].contains("kind")) {
        auto part = samples_of(spec[i], e, seed + 7919 * i, dflt);
        out.insert(out.end(), part.begin(), part.end());
      } else {
        out.push_back({point_from_json(spec[i]), dflt});
      }
    }
    return out;
  }
  if (!spec.is_object() || !spec.contains("kind")) throw InvalidInput("sample spec needs a kind");
  const std::string kind = spec["kind"];
  const Orientation o = spec.contains("orientation") ? orientation_from(spec["orientation"]) : dflt;
  const long count = spec.value("count", 20L);
  if (count < 0 || count > 10000000) throw InvalidInput("sample count out of range");
  if (spec.contains("seed")) seed = spec["seed"].get<unsigned long long>();
  R2Sequence s1(seed), s2(seed + 1);

  if (kind == "ring") {
    const Complex c = complex_from_json(spec.at("center")), y = complex_from_json(spec.value("y", json(0.0)));
    const double r = spec.at("radius"), turn = spec.value("y_turn", 0.3);
    for (long i = 0; i < count; ++i)
      out.push_back({Point(c + std::polar(r, 2 * kPi * double(i) / double(count)), y * std::polar(1.0, turn * double(i))), o});
  } else if (kind == "petal") {
    const PetalSpec p = spec.contains("level") ? e.petal_at_level(o, spec["level"].get<double>())
                                               : (o == Orientation::incoming ? e.incoming_petal() : e.outgoing_petal());
    const double sgn = o == Orientation::incoming ? -1 : 1;
    for (long tries = 0; long(out.size()) < count; ++tries) {
      if (tries > 100 * count + 100) throw InvalidInput("petal too small to sample");
      const auto [u1, u2] = s1.next();
      const auto [u3, u4] = s2.next();
      const Complex x = sgn * p.r + sgn * p.r * std::polar(0.95 * std::sqrt(u1), 2 * kPi * u2);
      if (std::abs(x) < 1e-3) continue;
      const Complex y = std::polar(0.95 * p.C * u3, 2 * kPi * u4) * pow_eta(sgn < 0 ? -x : x, e.germ().eta);
      out.push_back({Point(x, y), o});
    }
  } else if (kind == "box") {
    const json& w = spec.at("x");
    if (!w.is_array() || w.size() != 4) throw InvalidInput("box x-window is [re_min, re_max, im_min, im_max]");
    const double r0 = w[0], r1 = w[1], i0 = w[2], i1 = w[3], ymax = spec.value("y_max", 0.0);
    const bool mirror = spec.value("mirror", false);
    for (long i = 0; i < count; ++i) {
      const auto [u1, u2] = s1.next();
      const auto [u3, u4] = s2.next();
      double im = i0 + u2 * (i1 - i0);
      if (mirror && i % 2) im = -im;
      out.push_back({Point(Complex(r0 + u1 * (r1 - r0), im), std::polar(ymax * u3, 2 * kPi * u4)), o});
    }
  } else if (kind == "points") {
    for (const auto& p : spec.at("points")) out.push_back({point_from_json(p), o});
  } else {
    throw InvalidInput("unknown sample kind '" + kind + "'");
  }
  return out;
}

std::vector<Point> points_of(const std::vector<Sample>& s) {
  std::vector<Point> p;
  for (const auto& v : s) p.push_back(v.z);
  return p;
}

// ------------------------------------------------------------ context

struct Ctx {
  const Options& opt;
  const json& cfg;
  std::ostream& log;
  GermFamily family;

  void stage(const std::string& what) const { log << "[" << opt.subcommand << "] " << what << "\n"; }
  void write(const std::string& name, const std::string& bytes) const {
    write_atomic(opt.out / name, bytes);
    stage("wrote " + name);
  }
  unsigned long long seed() const { return cfg.value("seed", 1ULL); }
  FatouEngine engine() const {
    FatouPolicy pol;
    pol.domain_radius = cfg.value("domain_radius", pol.domain_radius);
    pol.entry_budget = cfg.value("entry_budget", pol.entry_budget);
    return FatouEngine(family, pol);
  }
  HarnessParams harness(bool estimate_sigma0) const {
    HarnessParams hp;
    hp.sigma = complex_from_json(cfg.value("sigma", json(0.0)));
    hp.q = cfg.contains("q") ? complex_from_json(cfg["q"]) : family.q;
    hp.N = cfg.value("N", 0L);
    hp.C = cfg.value("C", 2.0);
    if (cfg.contains("sigma0")) {
      hp.sigma0 = complex_from_json(cfg["sigma0"]);
    } else if (estimate_sigma0) {
      const auto grid = cfg.value("eps_grid", std::vector<double>{1e-2, 1e-3, 1e-4});
      hp.sigma0 = estimate_q_beta(family, grid).sigma0;
      stage("estimated sigma0 = " + fmt(hp.sigma0.real()) + " + " + fmt(hp.sigma0.imag()) + "i");
    }
    return hp;
  }
  std::vector<Sample> samples(const FatouEngine& e, Orientation dflt, const json& fallback) const {
    const json& spec = cfg.contains("samples") ? cfg["samples"] : fallback;
    auto s = samples_of(spec, e, seed(), dflt);
    Csv csv(std::vector<std::string>{"index", "orientation"} + cols("x") + cols("y"));
    for (size_t i = 0; i < s.size(); ++i) {
      std::vector<std::string> r{fmt(i), orientation_name(s[i].o)};
      put(r, s[i].z);
      csv.row(r);
    }
    write("samples.csv", csv.str());
    return s;
  }
};

GermFamily resolve_family(const json& cfg, std::ostream& log) {
  if (!cfg.contains("family")) throw InvalidInput("config has no family");
  const json& fj = cfg["family"];
  GermFamily f;
  if (fj.is_object() && fj.contains("x_series")) {
    auto [g, rec] = normalize_family(germ_from_json(fj, false));
    log << "normalized raw family components (" << rec.steps.size() << " steps)\n";
    f = g;
  } else {
    f = family_from_json(fj);
  }
  if (f.p() != Complex(0)) {
    f = normalize_p(f);
    log << "normalized away the eps-coefficient p of a\n";
  }
  return f;
}

Csv validation_csv(const ValidationReport& rep) {
  Csv csv({"condition", "status", "detail"});
  for (const auto& it : rep.items) csv.row({it.condition, it.pass ? "PASS" : "FAIL", it.detail});
  return csv;
}

// ------------------------------------------------------------ subcommands

int cmd_validate(Ctx& c) {
  const auto rep = validate_family(c.family);
  c.write("validation.csv", validation_csv(rep).str());
  Csv warn({"warning"});
  for (const auto& w : rep.warnings) warn.row({w});
  c.write("warnings.csv", warn.str());
  return rep.ok() ? kOk : kHypothesis;
}

int cmd_fixed_points(Ctx& c) {
  std::vector<Complex> eps;
  for (const auto& v : c.cfg.value("epsilons", json::array({1e-2, 1e-3, 1e-4}))) eps.push_back(complex_from_json(v));
  const double radius = c.cfg.value("domain_radius", 0.5);
  Csv csv(std::vector<std::string>{"eps_re", "eps_im", "index"} + cols("x") + cols("y") + cols("rho_T") + cols("rho_N") +
          cols("mu_T") + cols("mu_N") + std::vector<std::string>{"tangential", "ambiguous"});
  for (Complex e : eps) {
    const auto fps = fixed_points(c.family, e, radius);
    for (size_t i = 0; i < fps.size(); ++i) {
      const auto& r = fps[i];
      std::vector<std::string> row;
      put(row, e);
      row.push_back(fmt(i));
      put(row, r.location);
      put(row, r.rho_T), put(row, r.rho_N), put(row, r.mu_T), put(row, r.mu_N);
      row.push_back(fmt(r.tangential));
      row.push_back(fmt(r.ambiguous));
      csv.row(row);
    }
  }
  c.write("fixed_points.csv", csv.str());

  const auto grid = c.cfg.value("eps_grid", std::vector<double>{1e-2, 1e-3, 1e-4});
  const auto qb = estimate_q_beta(c.family, grid);
  Csv est(cols("q") + cols("beta") + cols("sigma0"));
  std::vector<std::string> row;
  put(row, qb.q), put(row, qb.beta), put(row, qb.sigma0);
  est.row(row);
  c.write("q_beta.csv", est.str());
  return kOk;
}

int cmd_fatou(Ctx& c) {
  const FatouEngine e = c.engine();
  const Orientation dflt = orientation_from(c.cfg.value("orientation", std::string("incoming")));
  const json fallback = json::array({{{"kind", "petal"}, {"orientation", "incoming"}, {"count", 100}},
                                     {{"kind", "petal"}, {"orientation", "outgoing"}, {"count", 100}}});
  const auto S = c.samples(e, dflt, fallback);
  const bool inverse = c.cfg.value("check_inverse", false);
  c.stage("evaluating " + std::to_string(S.size()) + " points");

  std::vector<Point> phi(S.size(), kNaNPoint);
  std::vector<double> abel(S.size(), std::nan("")), inv(S.size(), std::nan(""));
  std::vector<std::string> why(S.size());
  parallel_for(S.size(), c.opt.threads, [&](size_t i) {
    const auto coord = [&](const Point& z) { return S[i].o == Orientation::incoming ? e.incoming(z) : e.outgoing(z); };
    try {
      phi[i] = coord(S[i].z);
      // outgoing petals are backward invariant: pair z with its preimage instead of its image
      if (S[i].o == Orientation::incoming)
        abel[i] = (coord(e.step(S[i].z)) - phi[i] - Point(1.0, 0.0)).norm();
      else
        abel[i] = (phi[i] - coord(e.inverse_step(S[i].z)) - Point(1.0, 0.0)).norm();
      if (inverse && S[i].o == Orientation::outgoing) inv[i] = (e.outgoing(e.psi_o(phi[i])) - phi[i]).norm();
    } catch (const Error& err) {
      why[i] = describe(err);
    }
  });

  Csv csv(std::vector<std::string>{"index", "orientation"} + cols("x") + cols("y") + cols("X") + cols("Y") +
          std::vector<std::string>{"abel_residual", "inverse_residual", "status"});
  double sup = 0;
  long failed = 0, stuck = 0;
  for (size_t i = 0; i < S.size(); ++i) {
    std::vector<std::string> r{fmt(i), orientation_name(S[i].o)};
    put(r, S[i].z), put(r, phi[i]);
    r.push_back(fmt(abel[i]));
    r.push_back(fmt(inv[i]));
    r.push_back(why[i].empty() ? "ok" : why[i]);
    csv.row(r);
    if (why[i].empty()) sup = std::max(sup, abel[i]);
    failed += !why[i].empty();
    stuck += nonconvergence(why[i]);
  }
  c.write("fatou.csv", csv.str());
  Csv sum({"key", "value"});
  sum.row({"points", fmt(S.size())}).row({"sup_abel_residual", fmt(sup)}).row({"failures", fmt(failed)});
  c.write("fatou_summary.csv", sum.str());
  return stuck ? kNonConvergence : kOk;
}

int cmd_lavaurs(Ctx& c) {
  auto e = std::make_shared<const FatouEngine>(c.engine());
  const HarnessParams hp = c.harness(false);
  const LavaursMap L{hp.sigma, hp.q, e};
  const json fallback = {{"kind", "box"}, {"x", {-0.05, -0.03, 0.02, 0.04}}, {"y_max", 5e-7}, {"mirror", true}, {"count", 50}};
  const auto S = c.samples(*e, Orientation::incoming, fallback);
  const auto K = points_of(S);
  c.stage("Lavaurs map on " + std::to_string(K.size()) + " points");
  const auto rep = lavaurs_functional_check(L, K, c.opt.threads);

  Csv csv(std::vector<std::string>{"index"} + cols("x") + cols("y") + cols("Lx") + cols("Ly") +
          std::vector<std::string>{"commutation", "phase", "status"});
  long stuck = 0;
  for (const auto& p : rep.points) {
    std::vector<std::string> r{fmt(p.index)};
    put(r, K[p.index]), put(r, p.image);
    const bool ok = p.failure.empty();
    r.push_back(ok ? fmt(p.commutation) : "nan");
    r.push_back(ok ? fmt(p.phase) : "nan");
    r.push_back(ok ? "ok" : p.failure);
    csv.row(r);
    stuck += nonconvergence(p.failure);
  }
  c.write("lavaurs.csv", csv.str());
  Csv sum({"key", "value"});
  sum.row({"sigma_re", fmt(hp.sigma.real())}).row({"sigma_im", fmt(hp.sigma.imag())});
  sum.row({"q_re", fmt(hp.q.real())}).row({"q_im", fmt(hp.q.imag())});
  sum.row({"sup_commutation", fmt(rep.sup_commutation)}).row({"sup_phase", fmt(rep.sup_phase)});
  sum.row({"failures", fmt(rep.failures.size())});
  c.write("lavaurs_summary.csv", sum.str());
  return stuck ? kNonConvergence : kOk;
}

int cmd_implode(Ctx& c) {
  const FatouEngine e = c.engine();
  const HarnessParams hp = c.harness(true);
  const auto ladder = c.cfg.value("n_ladder", std::vector<long>{50, 100, 200, 400, 800});
  const json fallback = {{"kind", "ring"}, {"center", {-0.05, 0.03}}, {"radius", 0.004}, {"count", 20}, {"y", 5e-7}};
  const auto K = points_of(c.samples(e, Orientation::incoming, fallback));

  c.stage("Lavaurs targets for " + std::to_string(K.size()) + " points");
  std::vector<std::string> lfail;
  const auto targets = lavaurs_targets(e, hp, K, &lfail, c.opt.threads);
  Csv tcsv(std::vector<std::string>{"index"} + cols("Lx") + cols("Ly") + std::vector<std::string>{"status"});
  for (size_t i = 0; i < K.size(); ++i) {
    std::vector<std::string> r{fmt(i)};
    put(r, targets[i]);
    r.push_back(lfail[i].empty() ? "ok" : lfail[i]);
    tcsv.row(r);
  }
  c.write("targets.csv", tcsv.str());

  Csv conv(std::vector<std::string>{"n"} + cols("eps") + std::vector<std::string>{"E", "flagged"});
  Csv per({"n", "index", "error", "status"});
  bool empty = false;
  for (long n : ladder) {
    c.stage("n = " + std::to_string(n));
    const auto r = convergence_error(e, c.family, hp, n, K, c.opt.threads, &targets);
    std::vector<std::string> row{fmt(n)};
    put(row, epsilon_sequence(hp.sigma, hp.sigma0, n));
    const bool none = r.flagged.size() == K.size();
    row.push_back(none ? "nan" : fmt(r.sup));
    row.push_back(fmt(r.flagged.size()));
    conv.row(row);
    empty |= none && !K.empty();
    std::map<size_t, std::string> reason;
    for (size_t k = 0; k < r.flagged.size(); ++k) reason[r.flagged[k]] = r.reasons[k];
    for (size_t i = 0; i < K.size(); ++i)
      per.row({fmt(n), fmt(i), fmt(r.per_point[i]), reason.count(i) ? reason[i] : "ok"});
  }
  c.write("convergence.csv", conv.str());
  c.write("convergence_points.csv", per.str());
  return empty ? kNonConvergence : kOk;
}

int cmd_trace(Ctx& c) {
  const FatouEngine e = c.engine();
  const HarnessParams hp = c.harness(true);
  const long n = c.cfg.value("n", 400L);
  const Point z = point_from_json(c.cfg.at("point"));
  c.stage("tracing n = " + std::to_string(n));
  const auto tr = orbit_trace(e, c.family, hp, n, z);

  std::map<long, std::vector<const ResidualSample*>> at;
  for (const auto& r : tr.residuals) at[r.step].push_back(&r);
  Csv csv({"step", "x_re", "x_im", "y_re", "y_im", "phase", "residual_channel", "residual_value"});
  for (size_t j = 0; j < tr.points.size(); ++j) {
    std::vector<std::string> base{fmt(j)};
    put(base, tr.points[j]);
    base.push_back(phase_name(tr.phase_of(long(j))));
    const auto it = at.find(long(j));
    if (it == at.end()) {
      csv.row(base + std::vector<std::string>{"", ""});
      continue;
    }
    for (const auto* r : it->second) csv.row(base + std::vector<std::string>{r->channel, fmt(r->value)});
  }
  c.write("trace.csv", csv.str());
  Csv sum({"key", "value"});
  sum.row({"n", fmt(tr.n)}).row({"N", fmt(tr.N)}).row({"k_n", fmt(tr.k_n)});
  sum.row({"eps_re", fmt(tr.eps.real())}).row({"eps_im", fmt(tr.eps.imag())});
  sum.row({"region_at_kn", fmt(tr.region_at_kn)}).row({"region_at_n_minus_kn", fmt(tr.region_at_n_minus_kn)});
  c.write("trace_summary.csv", sum.str());
  return kOk;
}

int cmd_curve(Ctx& c) {
  const GermJets g = germ_from_json(c.cfg.at("germ"), true);
  const auto dirs = characteristic_directions(HomogeneousQuadratic::of(g));
  Csv dcsv(std::vector<std::string>{"index"} + cols("v0") + cols("v1") + cols("lambda") + cols("alpha") +
           std::vector<std::string>{"nondegenerate", "dicritical"});
  for (size_t i = 0; i < dirs.size(); ++i) {
    std::vector<std::string> r{fmt(i)};
    put(r, dirs[i].v(0)), put(r, dirs[i].v(1)), put(r, dirs[i].lambda);
    if (dirs[i].alpha) {
      put(r, *dirs[i].alpha);
    } else {
      r.push_back(""), r.push_back("");
    }
    r.push_back(fmt(dirs[i].nondegenerate));
    r.push_back(fmt(dirs[i].dicritical));
    dcsv.row(r);
  }
  c.write("directions.csv", dcsv.str());

  long pick = c.cfg.value("direction", -1L);
  if (pick < 0) {
    for (size_t i = 0; i < dirs.size() && pick < 0; ++i)
      if (dirs[i].nondegenerate && dirs[i].alpha && dirs[i].alpha->real() > 2) pick = long(i);
    for (size_t i = 0; i < dirs.size() && pick < 0; ++i)
      if (dirs[i].nondegenerate) pick = long(i);
  }
  if (pick < 0 || pick >= long(dirs.size()) || !dirs[pick].nondegenerate || !dirs[pick].alpha)
    throw Hypothesis("no nondegenerate characteristic direction to follow");
  const CharacteristicDirection& dir = dirs[pick];
  c.stage("following direction " + std::to_string(pick));

  CharacteristicDirection aligned_dir = dir;
  aligned_dir.v = Eigen::Vector2cd(1, 0);
  const GermJets aligned = dir.v == Eigen::Vector2cd(1, 0) ? g : align_direction(g, dir);
  const int m = int(std::floor(dir.alpha->real() + 1.0));
  const int order = c.cfg.value("curve_order", m + 2);
  if (order > aligned.order()) throw InvalidInput("curve_order exceeds the germ truncation order");
  const auto sol = formal_invariant_curve(aligned, aligned_dir, order);
  const auto [rx, ry] = curve_residual(aligned, sol);

  Csv ccsv(std::vector<std::string>{"degree"} + cols("zeta") + cols("h") + std::vector<std::string>{"residual_x", "residual_y"});
  for (int k = 0; k <= order; ++k) {
    std::vector<std::string> r{fmt(k)};
    put(r, sol.zeta.coeff(k)), put(r, sol.h.coeff(k));
    r.push_back(fmt(std::abs(rx.coeff(k))));
    r.push_back(fmt(std::abs(ry.coeff(k))));
    ccsv.row(r);
  }
  c.write("curve.csv", ccsv.str());

  // best effort: the full straightening, which needs the remaining hypotheses too
  try {
    const auto [fam, rec] = straighten(g, dir);
    c.write("normal_family.json", family_to_json(fam).dump(2) + "\n");
  } catch (const ResonanceObstruction&) {
    throw;
  } catch (const Error& err) {
    c.stage(std::string("straighten skipped: ") + describe(err));
  }
  return kOk;
}

struct Hsv {
  static Rgb rgb(double h, double s, double v) {
    h = (h - std::floor(h)) * 6.0;
    const int i = int(h) % 6;
    const double f = h - std::floor(h), p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    double r = v, g = t, b = p;
    switch (i) {
      case 1: r = q, g = v, b = p; break;
      case 2: r = p, g = v, b = t; break;
      case 3: r = p, g = q, b = v; break;
      case 4: r = t, g = p, b = v; break;
      case 5: r = v, g = p, b = q; break;
      default: break;
    }
    auto u = [](double x) { return std::uint8_t(std::lround(255 * x)); };
    return {u(r), u(g), u(b)};
  }
};

std::string rgb_str(Rgb c) { return std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b); }

int cmd_render(Ctx& c) {
  const json rc = c.cfg.value("render", json::object());
  const std::string mode = !c.opt.mode.empty() ? c.opt.mode : rc.value("mode", std::string("basin"));
  if (mode != "basin" && mode != "convergence" && mode != "fatou-phase")
    throw InvalidInput("render mode must be basin, convergence or fatou-phase");
  const auto win = rc.value("window", std::vector<double>{-0.3, 0.1, -0.2, 0.2});
  const auto res = rc.value("resolution", std::vector<int>{64, 64});
  if (win.size() != 4 || !(win[1] > win[0]) || !(win[3] > win[2])) throw InvalidInput("render window is degenerate");
  if (res.size() != 2 || res[0] < 1 || res[1] < 1 || res[0] > 8192 || res[1] > 8192)
    throw InvalidInput("render resolution must lie in [1, 8192]^2");
  const Complex ys = complex_from_json(rc.value("slice_y", json(1e-6)));
  const long budget = rc.value("budget", 10000L);
  const int W = res[0], H = res[1];

  const FatouEngine e = c.engine();
  const bool conv = mode == "convergence";
  const HarnessParams hp = c.harness(conv);
  const long n = rc.value("n", 200L);
  const LavaursMap L{hp.sigma - double(hp.N), hp.q, std::shared_ptr<const FatouEngine>(&e, [](const FatouEngine*) {})};

  enum Class : int { inside, escaped, unknown, failed };
  static const char* kClass[] = {"inside", "escaped", "unknown", "failed"};
  const size_t P = size_t(W) * H;
  std::vector<Class> cls(P, unknown);
  std::vector<double> val(P, std::nan("")), val2(P, std::nan(""));
  std::vector<std::string> why(P);
  std::vector<int> stuck(P, 0);
  auto at = [&](size_t k) {
    const int col = int(k % W), row = int(k / W);
    return Complex(win[0] + (col + 0.5) / W * (win[1] - win[0]), win[3] - (row + 0.5) / H * (win[3] - win[2]));
  };

  c.stage(mode + " " + std::to_string(W) + "x" + std::to_string(H));
  parallel_for(P, c.opt.threads, [&](size_t k) {
    const Point z(at(k), ys);
    const BasinOutcome b = e.basin(z, budget);
    if (std::holds_alternative<BasinEscaped>(b)) {
      cls[k] = escaped;
      val[k] = double(std::get<BasinEscaped>(b).n);
      return;
    }
    if (std::holds_alternative<BasinUnknown>(b)) {
      cls[k] = unknown;
      stuck[k] = 1;
      return;
    }
    cls[k] = inside;
    val[k] = double(std::get<BasinInside>(b).n0);
    if (mode == "basin") return;
    try {
      if (mode == "fatou-phase") {
        const Complex X = e.incoming(z)(0);
        val[k] = X.real(), val2[k] = X.imag();
      } else {
        const std::vector<Point> target{lavaurs_eval(L, z)};
        const auto r = convergence_error(e, c.family, hp, n, std::span<const Point>(&z, 1), 1, &target);
        if (!r.flagged.empty()) {
          cls[k] = failed;
          why[k] = r.reasons[0];
          stuck[k] = nonconvergence(why[k]);
        }
        val[k] = r.per_point[0];
      }
    } catch (const Error& err) {
      cls[k] = failed;
      val[k] = std::nan("");
      why[k] = describe(err);
      stuck[k] = nonconvergence(why[k]);
    }
  });

  Image img;
  img.width = W, img.height = H;
  img.comments = {"implab render mode=" + mode,
                  "window re=[" + fmt(win[0]) + "," + fmt(win[1]) + "] im=[" + fmt(win[2]) + "," + fmt(win[3]) + "]",
                  "slice y=" + fmt(ys.real()) + "," + fmt(ys.imag()) + " budget=" + fmt(budget)};
  if (mode == "basin")
    img.comments.push_back("colormap inside=" + rgb_str(kInside) + " escaped=" + rgb_str(kEscaped) + " unknown=" + rgb_str(kUnknown));
  else if (mode == "convergence")
    img.comments.push_back("colormap log10|g^(n-N)-L| on [-12,0] viridis 68,1,84 > 253,231,37; failed=" + rgb_str(kFailed) +
                           " escaped=" + rgb_str(kEscaped) + " unknown=" + rgb_str(kUnknown) + " n=" + fmt(n));
  else
    img.comments.push_back("colormap hue=frac(Re X) value=0.95/0.7 by parity of floor(Im X); failed=" + rgb_str(kFailed) +
                           " escaped=" + rgb_str(kEscaped) + " unknown=" + rgb_str(kUnknown));
  img.pixels.resize(P);
  long exhausted = 0;
  Csv csv({"row", "col", "x_re", "x_im", "class", "value", "value2", "status"});
  for (size_t k = 0; k < P; ++k) {
    Rgb color = kUnknown;
    switch (cls[k]) {
      case escaped: color = kEscaped; break;
      case unknown: color = kUnknown; break;
      case failed: color = kFailed; break;
      case inside:
        if (mode == "basin") {
          color = kInside;
        } else if (mode == "convergence") {
          color = log_error_color(val[k] > 0 ? std::log10(val[k]) : -12.0);
        } else {
          const bool even = (long(std::floor(val2[k])) % 2) == 0;
          color = Hsv::rgb(val[k], 0.8, even ? 0.95 : 0.7);
        }
        break;
    }
    img.pixels[k] = color;
    exhausted += stuck[k];
    const Complex x = at(k);
    csv.row({fmt(k / W), fmt(k % W), fmt(x.real()), fmt(x.imag()), kClass[cls[k]], fmt(val[k]), fmt(val2[k]),
             why[k].empty() ? "ok" : why[k]});
  }
  c.write("render_" + mode + ".ppm", encode_ppm(img));
  c.write("render_" + mode + ".csv", csv.str());
  if (5 * exhausted > long(P)) {
    c.stage("budget exhausted on " + std::to_string(exhausted) + " of " + std::to_string(P) + " pixels");
    return kNonConvergence;
  }
  return kOk;
}

void write_error(const Options& opt, const std::string& kind, const std::string& msg, std::ostream& log) {
  try {
    Csv csv({"subcommand", "kind", "message"});
    csv.row({opt.subcommand, kind, msg});
    write_atomic(opt.out / "error.csv", csv.str());
  } catch (const std::exception& e) {
    log << "could not write error.csv: " << e.what() << "\n";
  }
}

}  // namespace

int run(const Options& opt, const json& cfg, std::ostream& log) {
  const auto& subs = subcommands();
  if (std::find(subs.begin(), subs.end(), opt.subcommand) == subs.end()) {
    log << "unknown subcommand '" << opt.subcommand << "'\n";
    return kConfigError;
  }
  try {
    std::filesystem::create_directories(opt.out);
  } catch (const std::exception& e) {
    log << "cannot create output directory: " << e.what() << "\n";
    return kConfigError;
  }
  auto fail = [&](int code, const std::string& kind, const std::string& msg) {
    log << "[" << opt.subcommand << "] " << kind << ": " << msg << "\n";
    if (code != kConfigError) write_error(opt, kind, msg, log);
    return code;
  };
  try {
    if (!cfg.is_object()) throw InvalidInput("config must be a JSON object");
    Ctx c{opt, cfg, log, GermFamily::model()};
    if (opt.subcommand != "curve" || cfg.contains("family")) {
      c.family = resolve_family(cfg, log);
      c.write("family.json", family_to_json(c.family).dump(2) + "\n");
      if (opt.subcommand == "validate") return cmd_validate(c);
      const auto rep = validate_family(c.family);
      if (!rep.ok()) {
        c.write("validation.csv", validation_csv(rep).str());
        return fail(kHypothesis, "validation", "family violates the standing hypotheses, see validation.csv");
      }
    }
    if (opt.subcommand == "fixed-points") return cmd_fixed_points(c);
    if (opt.subcommand == "fatou") return cmd_fatou(c);
    if (opt.subcommand == "lavaurs") return cmd_lavaurs(c);
    if (opt.subcommand == "implode") return cmd_implode(c);
    if (opt.subcommand == "trace") return cmd_trace(c);
    if (opt.subcommand == "curve") return cmd_curve(c);
    return cmd_render(c);
  } catch (const json::exception& e) {
    return fail(kConfigError, "config", e.what());
  } catch (const InvalidInput& e) {
    return fail(kConfigError, "InvalidInput", e.what());
  } catch (const Hypothesis& e) {
    return fail(kHypothesis, "hypothesis", e.what());
  } catch (const ResonanceObstruction& e) {
    return fail(kHypothesis, error_kind(e), e.what());
  } catch (const DegenerateSplitting& e) {
    return fail(kHypothesis, error_kind(e), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(kConfigError, "filesystem", e.what());
  } catch (const std::exception& e) {
    return fail(kNonConvergence, error_kind(e), e.what());
  }
}

int run(const Options& opt, std::ostream& log) {
  json cfg;
  try {
    std::ifstream f(opt.config, std::ios::binary);
    if (!f) {
      log << "cannot read config " << opt.config << "\n";
      return kConfigError;
    }
    cfg = json::parse(f);
  } catch (const json::exception& e) {
    log << "config parse error: " << e.what() << "\n";
    return kConfigError;
  }
  return run(opt, cfg, log);
}

}  // namespace implab::cli
