// Copyright 2026 The ptvqe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ptvqe/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "ptvqe/oracle.hpp"
#include "ptvqe/rdm.hpp"
#include "ptvqe/vqe.hpp"

namespace ptvqe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

qsim::LayeredCircuit ansatz_circuit(const vqe::Ansatz& a) {
  qsim::LayeredCircuit c;
  c.initial = qsim::prepare_reference(a.n_qubits, a.occupied);
  for (std::size_t k = 0; k < a.size(); ++k)
    c.layers.push_back([g = a.ops[k].generator, t = a.theta[k]](qsim::Statevector& s) {
      s = qsim::apply_exp_generator(s, g, t);
    });
  return c;
}

struct StageRdms {
  std::string name;
  rdm::RealRdm d1, d2;
  double retained = 1.0;
  std::optional<mitigate::ReconstructReport> reconstruction;
};

// Raw, symmetry-verified and reconstructed 1-/2-RDMs from one set of shots.
std::vector<StageRdms> sampled_stages(const RunConfig& cfg, const vqe::Ansatz& ansatz, int n_electrons,
                                      const integrals::ActiveHamiltonian& h, std::mt19937_64& rng) {
  const int nq = ansatz.n_qubits;
  const auto t1 = rdm::rdm_pauli_terms(1, nq);
  const auto t2 = rdm::rdm_pauli_terms(2, nq);
  std::vector<qsim::PauliString> strings;
  std::map<std::pair<Det, Det>, std::size_t> index;
  for (const auto* t : {&t1, &t2})
    for (const auto& s : t->strings)
      if (index.emplace(std::make_pair(s.x, s.z), strings.size()).second) strings.push_back(s);
  auto pick = [&](const rdm::RdmPauliTerms& t, const std::vector<double>& v) {
    std::vector<double> out;
    for (const auto& s : t.strings) out.push_back(v[index.at({s.x, s.z})]);
    return rdm::real_part(rdm::assemble_rdm(t, out));
  };
  const auto circuit = ansatz_circuit(ansatz);
  auto measure = [&](const rdm::MeasurementPlan& plan) {
    std::vector<qsim::Counts> counts;
    for (const auto& g : plan.groups) counts.push_back(qsim::sample_counts(circuit, g.basis, cfg.shots, cfg.noise, rng));
    return counts;
  };

  std::vector<StageRdms> out;
  std::vector<double> verified;
  double retained = 1.0;
  if (cfg.sv) {
    const auto spec = mitigate::SymmetrySpec::parity(nq, n_electrons % 2 ? -1 : 1);
    const auto plan = mitigate::sv_measurement_plan(strings, spec, cfg.shots);
    const auto est = mitigate::sv_string_expectations(plan, measure(plan.plan));
    out.push_back({"raw", pick(t1, est.raw), pick(t2, est.raw), 1.0, std::nullopt});
    verified = est.verified;
    retained = est.retained_fraction;
    out.push_back({"sv", pick(t1, verified), pick(t2, verified), retained, std::nullopt});
  } else {
    const auto plan = rdm::group_qwc(strings, cfg.shots);
    const auto v = rdm::string_expectations(plan, measure(plan));
    out.push_back({"raw", pick(t1, v), pick(t2, v), 1.0, std::nullopt});
  }
  if (cfg.rdm_reconstruct) {
    mitigate::ReconstructOptions opt;
    opt.mode = cfg.reconstruct_mode;
    const auto& src = out.back();
    auto rec = mitigate::reconstruct_rdm(src.d2, n_electrons, opt, &h);
    out.push_back({cfg.sv ? "sv+rdm" : "rdm", rec.d1, rec.d2, src.retained, rec.report});
  }
  return out;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const std::string& base_dir) {
  RunConfig c;
  try {
    c.system = get_or<std::string>(j, "system", "");
    for (const auto& g : j.at("geometries")) {
      fs::path p = g.at("fcidump").get<std::string>();
      if (p.is_relative()) p = fs::path(base_dir) / p;
      c.geometries.push_back({g.at("bond_length").get<double>(), p.lexically_normal().string()});
    }
    const auto& part = j.at("partition");
    c.frozen = get_or<std::vector<int>>(part, "frozen", {});
    c.inactive = get_or<std::vector<int>>(part, "inactive", {});
    c.active = part.at("active").get<std::vector<int>>();
    if (j.contains("vqe")) {
      const auto& v = j["vqe"];
      const auto mode = get_or<std::string>(v, "mode", "adapt");
      if (mode == "adapt")
        c.vqe_mode = VqeMode::adapt;
      else if (mode == "fixed_f2")
        c.vqe_mode = VqeMode::fixed_f2;
      else
        throw ConfigError("unknown vqe mode " + mode);
      c.eps_grad = get_or(v, "eps_grad", c.eps_grad);
    }
    if (j.contains("rdm")) {
      const auto& r = j["rdm"];
      const auto mode = get_or<std::string>(r, "mode", "exact");
      if (mode == "exact")
        c.rdm_mode = RdmMode::exact;
      else if (mode == "shots")
        c.rdm_mode = RdmMode::shots;
      else
        throw ConfigError("unknown rdm mode " + mode);
      c.shots = get_or<std::uint64_t>(r, "shots", c.shots);
      if (r.contains("noise")) {
        const auto& n = r["noise"];
        c.noise.depol_p = get_or(n, "depol_p", 0.0);
        c.noise.readout_p01 = get_or(n, "readout_p01", 0.0);
        c.noise.readout_p10 = get_or(n, "readout_p10", 0.0);
      }
    }
    if (j.contains("mitigation")) {
      const auto& m = j["mitigation"];
      c.sv = get_or(m, "sv", false);
      c.rdm_reconstruct = get_or(m, "rdm_reconstruct", false);
      const auto mode = get_or<std::string>(m, "reconstruct_mode", "nearest");
      if (mode == "nearest")
        c.reconstruct_mode = mitigate::ReconstructMode::nearest;
      else if (mode == "energy_min")
        c.reconstruct_mode = mitigate::ReconstructMode::energy_min;
      else
        throw ConfigError("unknown reconstruct mode " + mode);
    }
    if (j.contains("pt")) {
      const auto& p = j["pt"];
      c.restrict_3rdm = get_or(p, "restrict_3rdm", c.restrict_3rdm);
      c.screen = get_or(p, "screen", c.screen);
      c.overlap_threshold = get_or(p, "overlap_threshold", c.overlap_threshold);
      c.raw_diagonal = get_or(p, "raw_diagonal", c.raw_diagonal);
      const auto ortho = get_or<std::string>(p, "ortho", "lowdin");
      if (ortho == "lowdin")
        c.ortho = perturb::OrthoMode::lowdin;
      else if (ortho == "canonical")
        c.ortho = perturb::OrthoMode::canonical;
      else
        throw ConfigError("unknown orthonormalization " + ortho);
      c.also_diagonalize = get_or(p, "also_diagonalize", c.also_diagonalize);
      const auto route = get_or<std::string>(p, "hbar", "density");
      if (route == "density")
        c.hbar = perturb::HbarRoute::density;
      else if (route == "engine")
        c.hbar = perturb::HbarRoute::engine;
      else
        throw ConfigError("unknown hbar route " + route);
    }
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("output")) {
      const auto& o = j["output"];
      c.output = get_or<std::string>(o, "path", "");
      c.format = parse_format(get_or<std::string>(o, "format", "csv"));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j, fs::path(path).parent_path().string());
}

void RunConfig::validate() const {
  for (const auto& g : geometries)
    if (!fs::exists(g.fcidump)) throw ConfigError("missing FCIDUMP " + g.fcidump);
  if (active.empty()) throw ConfigError("active space is empty");
  if (rdm_mode == RdmMode::shots && shots == 0) throw ConfigError("shot count must be positive");
  if (screen < 0.0) throw ConfigError("screening threshold must be non-negative");
  if (!(overlap_threshold > 0.0)) throw ConfigError("overlap threshold must be positive");
  noise.validate();
}

GeometryResult run_geometry(const RunConfig& cfg, std::size_t index) {
  const auto& geo = cfg.geometries.at(index);
  GeometryResult out;
  Row base;
  base.system = cfg.system;
  base.bond_length = geo.bond_length;
  try {
    const auto ints = integrals::read_fcidump(geo.fcidump);
    const auto part = integrals::partition_orbitals(ints.n_orbitals, cfg.frozen, cfg.inactive, cfg.active);
    const auto h = integrals::fold_core(ints, part);
    const int n_act = h.n_electrons;
    const int nq = 2 * h.n_orbitals();

    base.e_casci_active = oracle::casci(h, n_act, 0).energy;
    std::vector<int> keep;
    for (int q = 0; q < ints.n_orbitals; ++q)
      if (std::find(part.frozen.begin(), part.frozen.end(), q) == part.frozen.end()) keep.push_back(q);
    const auto nonfrozen = integrals::fold_orbitals(ints, part.frozen, keep);
    base.e_casci_nonfrozen = oracle::casci(nonfrozen, nonfrozen.n_electrons, 0).energy;

    const auto sector = vqe::make_sector(h);
    vqe::VqeResult res;
    if (cfg.vqe_mode == VqeMode::adapt) {
      vqe::AdaptOptions o;
      o.eps_grad = cfg.eps_grad;
      res = vqe::adapt_vqe(sector, vqe::build_pool(part), o);
    } else {
      if (nq != 4 || n_act != 2) throw ConfigError("fixed_f2 ansatz needs two electrons in two orbitals");
      res = vqe::optimize_ansatz(sector, vqe::fixed_ansatz_f2(0.1));
    }
    json vj;
    vj["energy"] = res.energy;
    vj["operators"] = res.ansatz.size();
    vj["theta"] = res.ansatz.theta;
    vj["final_gradient_norm"] = res.final_gradient_norm;
    std::vector<std::string> labels;
    for (const auto& op : res.ansatz.ops) labels.push_back(op.label());
    vj["labels"] = labels;
    out.details["vqe"] = vj;

    const perturb::Reference ref{n_act, sector.space.dets(), res.sector_state, res.energy};
    const auto space = perturb::make_pt_space(ints, part);
    const auto excitations = perturb::enumerate_excitations(part, cfg.restrict_3rdm);
    perturb::PtOptions popt;
    popt.hbar = cfg.hbar;
    popt.delta = cfg.overlap_threshold;
    popt.ortho = cfg.ortho;
    popt.raw_diagonal = cfg.raw_diagonal;

    struct Stage {
      std::string name;
      perturb::RdmSet rdms;
      perturb::ActiveDensity rho;
      double e_vqe;
      double retained;
      std::optional<mitigate::ReconstructReport> rec;
    };
    std::vector<Stage> stages;
    if (cfg.rdm_mode == RdmMode::exact) {
      stages.push_back({"exact", perturb::RdmSet::from_reference(ref, nq, cfg.restrict_3rdm ? 3 : 4),
                        perturb::pure_density(ref), res.energy, 1.0, std::nullopt});
    } else {
      if (n_act > 3) throw ConfigError("sampled RDMs support at most three active electrons");
      std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(index)};
      std::mt19937_64 rng(seq);
      for (auto& s : sampled_stages(cfg, res.ansatz, n_act, h, rng)) {
        perturb::RdmSet set(nq, n_act);
        set.set(s.d1);
        if (n_act >= 2) set.set(s.d2);
        if (n_act >= 3) set.set(rdm::cumulant_3rdm(s.d1, s.d2));
        auto rho = perturb::density_from_rdm(set.get(n_act), n_act);
        const double e = rdm::rdm_energy(h, s.d1, s.d2);
        stages.push_back({s.name, std::move(set), std::move(rho), e, s.retained, s.reconstruction});
      }
    }

    json stage_details = json::object();
    for (const auto& st : stages) {
      Row row = base;
      row.stage = st.name;
      row.e_vqe = st.e_vqe;
      row.retained_fraction = st.retained;
      auto sub = perturb::build_subspace(space, st.rdms, st.rho, st.e_vqe, excitations, popt);
      auto rep = perturb::pt2(sub, popt);
      row.n_excitations = static_cast<int>(excitations.size());
      row.n_kept = static_cast<int>(sub.X.cols());
      row.n_screened = row.n_excitations;
      row.rdm_order_used = rep.rdm_order_used;
      row.e1 = rep.e1;
      row.max_w = row.max_denominator = -std::numeric_limits<double>::infinity();
      for (const auto& t : rep.terms) {
        if (t.skipped) continue;
        row.max_w = std::max(row.max_w, t.w);
        row.max_denominator = std::max(row.max_denominator, t.denominator);
      }
      if (!std::isfinite(row.max_w)) row.max_w = row.max_denominator = kNaN;
      if (cfg.screen > 0.0) {
        const auto kept = perturb::screen(rep, cfg.screen);
        row.n_screened = static_cast<int>(kept.size());
        sub = perturb::build_subspace(space, st.rdms, st.rho, st.e_vqe, kept, popt);
        rep = perturb::pt2(sub, popt);
      }
      row.e_pt2 = rep.e0;
      row.e_diag = cfg.also_diagonalize ? perturb::subspace_solve(sub).e0 : kNaN;
      out.rows.push_back(row);

      json sj;
      mitigate::MitigationReport mr{st.retained, st.rec};
      sj["mitigation"] = mitigate::to_json(mr);
      auto terms = rep.terms;
      std::stable_sort(terms.begin(), terms.end(),
                       [](const auto& a, const auto& b) { return std::abs(a.w) > std::abs(b.w); });
      json top = json::array();
      for (std::size_t k = 0; k < std::min<std::size_t>(terms.size(), 20); ++k)
        top.push_back({{"excitation", terms[k].excitation.label()}, {"w", terms[k].w}});
      sj["leading_terms"] = top;
      sj["dropped"] = rep.dropped.size();
      sj["skipped"] = rep.skipped.size();
      stage_details[st.name] = sj;
    }
    out.details["stages"] = stage_details;
  } catch (const std::exception& e) {
    out.ok = false;
    out.diagnostic = e.what();
    Row row = base;
    row.stage = "failed";
    row.e_vqe = row.e_pt2 = row.e_diag = kNaN;
    row.status = std::string("error: ") + e.what();
    out.rows = {row};
  }
  out.details["bond_length"] = geo.bond_length;
  out.details["fcidump"] = fs::path(geo.fcidump).filename().string();
  if (!out.ok) out.details["diagnostic"] = out.diagnostic;
  return out;
}

PesTable run_pes(const RunConfig& cfg) {
  cfg.validate();
  PesTable t;
  std::vector<std::size_t> order(cfg.geometries.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return cfg.geometries[a].bond_length < cfg.geometries[b].bond_length;
  });
  for (auto k : order) {
    auto g = run_geometry(cfg, k);
    if (!g.ok) ++t.failures;
    for (const auto& r : g.rows) t.rows.push_back(r);
    t.geometries.push_back(std::move(g));
  }
  json m;
  m["system"] = cfg.system;
  m["seed"] = cfg.seed;
  m["rdm_mode"] = cfg.rdm_mode == RdmMode::exact ? "exact" : "shots";
  if (cfg.rdm_mode == RdmMode::shots) {
    m["shots_per_group"] = cfg.shots;
    m["noise"] = {{"depol_p", cfg.noise.depol_p},
                  {"readout_p01", cfg.noise.readout_p01},
                  {"readout_p10", cfg.noise.readout_p10}};
  }
  if (cfg.rdm_mode == RdmMode::shots)
    m["mitigation"] = {{"sv", cfg.sv}, {"rdm_reconstruct", cfg.rdm_reconstruct}};
  else
    m["mitigation"] = (cfg.sv || cfg.rdm_reconstruct || !cfg.noise.noiseless())
                          ? "not applicable to exact RDMs; requested settings ignored"
                          : "not applicable to exact RDMs";
  m["restrict_3rdm"] = cfg.restrict_3rdm;
  m["screen"] = cfg.screen;
  m["overlap_threshold"] = cfg.overlap_threshold;
  m["ortho"] = cfg.ortho == perturb::OrthoMode::lowdin ? "lowdin" : "canonical";
  m["raw_diagonal"] = cfg.raw_diagonal;
  m["vqe_mode"] = cfg.vqe_mode == VqeMode::adapt ? "adapt" : "fixed_f2";
  m["eps_grad"] = cfg.eps_grad;
  m["failures"] = t.failures;
  t.metadata = m;
  return t;
}

std::vector<std::string> csv_columns() {
  return {"system", "bond_length", "stage", "e_vqe", "e_pt2", "e_diag", "e_casci_active",
          "e_casci_nonfrozen", "vqe_error", "vqe_total_error", "pt_error", "diag_error", "e1", "max_w",
          "max_denominator", "n_excitations", "n_kept", "n_screened", "rdm_order_used", "retained_fraction",
          "status"};
}

namespace {

std::vector<std::string> row_fields(const Row& r) {
  return {r.system,
          fmt(r.bond_length),
          r.stage,
          fmt(r.e_vqe),
          fmt(r.e_pt2),
          fmt(r.e_diag),
          fmt(r.e_casci_active),
          fmt(r.e_casci_nonfrozen),
          fmt(r.vqe_error()),
          fmt(r.vqe_total_error()),
          fmt(r.pt_error()),
          fmt(r.diag_error()),
          fmt(r.e1),
          fmt(r.max_w),
          fmt(r.max_denominator),
          std::to_string(r.n_excitations),
          std::to_string(r.n_kept),
          std::to_string(r.n_screened),
          std::to_string(r.rdm_order_used),
          fmt(r.retained_fraction),
          r.status};
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

void emit(const PesTable& table, Format format, std::ostream& out) {
  if (format == Format::csv) {
    out << "# ptvqe potential energy surface\n";
    out << "# metadata " << table.metadata.dump() << "\n";
    out << "# energies in hartree; errors are against e_casci_active (vqe_error) or e_casci_nonfrozen\n";
    const auto cols = csv_columns();
    for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
    out << "\n";
    for (const auto& r : table.rows) {
      const auto f = row_fields(r);
      for (std::size_t k = 0; k < f.size(); ++k) out << (k ? "," : "") << csv_escape(f[k]);
      out << "\n";
    }
    return;
  }
  json j;
  j["metadata"] = table.metadata;
  json rows = json::array();
  for (const auto& r : table.rows) {
    json o;
    o["system"] = r.system;
    o["bond_length"] = r.bond_length;
    o["stage"] = r.stage;
    o["e_vqe"] = number_or_null(r.e_vqe);
    o["e_pt2"] = number_or_null(r.e_pt2);
    o["e_diag"] = number_or_null(r.e_diag);
    o["e_casci_active"] = r.e_casci_active;
    o["e_casci_nonfrozen"] = r.e_casci_nonfrozen;
    o["vqe_error"] = number_or_null(r.vqe_error());
    o["vqe_total_error"] = number_or_null(r.vqe_total_error());
    o["pt_error"] = number_or_null(r.pt_error());
    o["diag_error"] = number_or_null(r.diag_error());
    o["e1"] = r.e1;
    o["max_w"] = number_or_null(r.max_w);
    o["max_denominator"] = number_or_null(r.max_denominator);
    o["n_excitations"] = r.n_excitations;
    o["n_kept"] = r.n_kept;
    o["n_screened"] = r.n_screened;
    o["rdm_order_used"] = r.rdm_order_used;
    o["retained_fraction"] = r.retained_fraction;
    o["status"] = r.status;
    rows.push_back(o);
  }
  j["rows"] = rows;
  json geos = json::array();
  for (const auto& g : table.geometries) geos.push_back(g.details);
  j["geometries"] = geos;
  out << j.dump(2) << "\n";
}

void emit(const PesTable& table, Format format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  emit(table, format, out);
  if (!out) throw ConfigError("write failed for " + path);
}

void apply_mitigate_flag(RunConfig& cfg, const std::string& mitigate) {
  cfg.sv = false;
  cfg.rdm_reconstruct = false;
  if (mitigate.empty() || mitigate == "none") return;
  std::stringstream ss(mitigate);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "sv")
      cfg.sv = true;
    else if (item == "rdm")
      cfg.rdm_reconstruct = true;
    else
      throw ConfigError("unknown mitigation " + item);
  }
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("unknown format " + s);
}

}  // namespace ptvqe::cli
