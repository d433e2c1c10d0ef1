#include "bidomain/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bidomain {

using nlohmann::json;

namespace {

json to_json(const RunConfig& c) {
  json j;
  j["geometry"] = {{"kind", c.geometry.kind},
                   {"nx", c.geometry.nx},
                   {"ny", c.geometry.ny},
                   {"nz", c.geometry.nz},
                   {"extents", c.geometry.extents},
                   {"ellipsoid",
                    {{"a1", c.geometry.ellipsoid.a1},
                     {"a2", c.geometry.ellipsoid.a2},
                     {"b1", c.geometry.ellipsoid.b1},
                     {"b2", c.geometry.ellipsoid.b2},
                     {"c1", c.geometry.ellipsoid.c1},
                     {"c2", c.geometry.ellipsoid.c2},
                     {"phi_min", c.geometry.ellipsoid.phi_min},
                     {"phi_max", c.geometry.ellipsoid.phi_max},
                     {"theta_min", c.geometry.ellipsoid.theta_min},
                     {"theta_max", c.geometry.ellipsoid.theta_max}}}};
  j["decomposition"] = {{"px", c.px}, {"py", c.py}, {"pz", c.pz}};
  j["ionic"] = {{"G", c.ionic.G},     {"v_th", c.ionic.v_th}, {"v_p", c.ionic.v_p},
                {"eta1", c.ionic.eta1}, {"eta2", c.ionic.eta2}, {"C_m", c.ionic.C_m},
                {"chi", c.ionic.chi}};
  j["conductivity"] = {{"sigma_l_i", c.conductivity.sigma_l_i},
                       {"sigma_t_i", c.conductivity.sigma_t_i},
                       {"sigma_n_i", c.conductivity.sigma_n_i},
                       {"sigma_l_e", c.conductivity.sigma_l_e},
                       {"sigma_t_e", c.conductivity.sigma_t_e},
                       {"sigma_n_e", c.conductivity.sigma_n_e}};
  j["stimulus"] = {{"amplitude", c.stimulus.amplitude},
                   {"duration", c.stimulus.duration},
                   {"radius", c.stimulus.radius},
                   {"placement", c.stimulus.placement},
                   {"sites", c.stimulus.sites}};
  j["gmres"] = {{"restart", c.gmres.restart},
                {"max_iters", c.gmres.max_iters},
                {"rtol", c.gmres.rtol}};
  j["newton"] = {{"tol", c.newton.tol}, {"max_iters", c.newton.max_iters}};
  j["scaling"] = c.scaling;
  j["primal"] = c.primal;
  j["preconditioner"] = c.preconditioner;
  j["experiment"] = c.experiment;
  j["t_end"] = c.t_end;
  j["tau"] = c.tau;
  j["snapshot_every"] = c.snapshot_every;
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["deterministic"] = c.deterministic;
  j["lump_ionic"] = c.lump_ionic;
  j["deluxe_sym_minors"] = c.deluxe_sym_minors;
  return j;
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig from_json(const json& j) {
  RunConfig c;
  if (j.contains("geometry")) {
    const json& g = j["geometry"];
    get_if(g, "kind", c.geometry.kind);
    get_if(g, "nx", c.geometry.nx);
    get_if(g, "ny", c.geometry.ny);
    get_if(g, "nz", c.geometry.nz);
    get_if(g, "extents", c.geometry.extents);
    if (g.contains("ellipsoid")) {
      const json& e = g["ellipsoid"];
      get_if(e, "a1", c.geometry.ellipsoid.a1);
      get_if(e, "a2", c.geometry.ellipsoid.a2);
      get_if(e, "b1", c.geometry.ellipsoid.b1);
      get_if(e, "b2", c.geometry.ellipsoid.b2);
      get_if(e, "c1", c.geometry.ellipsoid.c1);
      get_if(e, "c2", c.geometry.ellipsoid.c2);
      get_if(e, "phi_min", c.geometry.ellipsoid.phi_min);
      get_if(e, "phi_max", c.geometry.ellipsoid.phi_max);
      get_if(e, "theta_min", c.geometry.ellipsoid.theta_min);
      get_if(e, "theta_max", c.geometry.ellipsoid.theta_max);
    }
  }
  if (j.contains("decomposition")) {
    get_if(j["decomposition"], "px", c.px);
    get_if(j["decomposition"], "py", c.py);
    get_if(j["decomposition"], "pz", c.pz);
  }
  if (j.contains("ionic")) {
    const json& i = j["ionic"];
    get_if(i, "G", c.ionic.G);
    get_if(i, "v_th", c.ionic.v_th);
    get_if(i, "v_p", c.ionic.v_p);
    get_if(i, "eta1", c.ionic.eta1);
    get_if(i, "eta2", c.ionic.eta2);
    get_if(i, "C_m", c.ionic.C_m);
    get_if(i, "chi", c.ionic.chi);
  }
  if (j.contains("conductivity")) {
    const json& s = j["conductivity"];
    get_if(s, "sigma_l_i", c.conductivity.sigma_l_i);
    get_if(s, "sigma_t_i", c.conductivity.sigma_t_i);
    get_if(s, "sigma_n_i", c.conductivity.sigma_n_i);
    get_if(s, "sigma_l_e", c.conductivity.sigma_l_e);
    get_if(s, "sigma_t_e", c.conductivity.sigma_t_e);
    get_if(s, "sigma_n_e", c.conductivity.sigma_n_e);
  }
  if (j.contains("stimulus")) {
    const json& s = j["stimulus"];
    get_if(s, "amplitude", c.stimulus.amplitude);
    get_if(s, "duration", c.stimulus.duration);
    get_if(s, "radius", c.stimulus.radius);
    get_if(s, "placement", c.stimulus.placement);
    get_if(s, "sites", c.stimulus.sites);
  }
  if (j.contains("gmres")) {
    get_if(j["gmres"], "restart", c.gmres.restart);
    get_if(j["gmres"], "max_iters", c.gmres.max_iters);
    get_if(j["gmres"], "rtol", c.gmres.rtol);
  }
  if (j.contains("newton")) {
    get_if(j["newton"], "tol", c.newton.tol);
    get_if(j["newton"], "max_iters", c.newton.max_iters);
  }
  get_if(j, "scaling", c.scaling);
  get_if(j, "primal", c.primal);
  get_if(j, "preconditioner", c.preconditioner);
  get_if(j, "experiment", c.experiment);
  get_if(j, "t_end", c.t_end);
  get_if(j, "tau", c.tau);
  get_if(j, "snapshot_every", c.snapshot_every);
  get_if(j, "out_dir", c.out_dir);
  get_if(j, "seed", c.seed);
  get_if(j, "threads", c.threads);
  get_if(j, "deterministic", c.deterministic);
  get_if(j, "lump_ionic", c.lump_ionic);
  get_if(j, "deluxe_sym_minors", c.deluxe_sym_minors);
  return c;
}

}  // namespace

void RunConfig::validate() const {
  if (geometry.kind != "slab" && geometry.kind != "ellipsoid")
    throw InvalidConfig("geometry.kind must be slab or ellipsoid");
  if (geometry.nx < 1 || geometry.ny < 1 || geometry.nz < 1)
    throw InvalidConfig("element counts must be >= 1");
  if (px < 1 || py < 1 || pz < 1) throw InvalidConfig("subdomain counts must be >= 1");
  if (geometry.nx % px || geometry.ny % py || geometry.nz % pz)
    throw InvalidConfig("subdomain grid must divide the element grid");
  if (scaling != "rho" && scaling != "deluxe")
    throw InvalidConfig("scaling must be rho or deluxe");
  if (primal != "v" && primal != "ve" && primal != "vef")
    throw InvalidConfig("primal must be v, ve or vef");
  if (preconditioner != "bddc" && preconditioner != "bj" && preconditioner != "none")
    throw InvalidConfig("preconditioner must be bddc, bj or none");
  for (const std::string& e :
       {std::string("single"), std::string("weak"), std::string("strong"),
        std::string("optimality"), std::string("heartbeat")})
    if (experiment == e) {
      ionic.validate();
      conductivity.validate();
      gmres.validate();
      newton.validate();
      return;
    }
  throw InvalidConfig("unknown experiment kind: " + experiment);
}

RunConfig preset(const std::string& name) {
  RunConfig c;  // defaults already carry the standard parameter tables
  if (name == "slab-paper") {
    c.geometry.kind = "slab";
    c.geometry.nx = c.geometry.ny = c.geometry.nz = 12;
    c.geometry.extents = {0.48, 0.48, 0.48};
    c.px = c.py = c.pz = 2;
  } else if (name == "ellipsoid-paper") {
    c.geometry.kind = "ellipsoid";
    c.geometry.nx = c.geometry.ny = 12;
    c.geometry.nz = 4;
    c.px = c.py = 2;
    c.pz = 1;
    c.stimulus.placement = "endocardial";
    c.stimulus.radius = 0.3;
  } else {
    throw InvalidConfig("unknown preset: " + name);
  }
  return c;
}

std::vector<std::string> preset_names() { return {"slab-paper", "ellipsoid-paper"}; }

RunConfig parse_config(const std::string& json_text) {
  return from_json(json::parse(json_text));
}

std::string serialize_config(const RunConfig& cfg) { return to_json(cfg).dump(2); }

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ScalingKind scaling_kind(const RunConfig& cfg) {
  return cfg.scaling == "deluxe" ? ScalingKind::Deluxe : ScalingKind::Rho;
}

PrimalConfig primal_config(const RunConfig& cfg) {
  if (cfg.primal == "v") return PrimalConfig::V;
  if (cfg.primal == "vef") return PrimalConfig::VEF;
  return PrimalConfig::VE;
}

PreconditionerKind preconditioner_kind(const RunConfig& cfg) {
  if (cfg.preconditioner == "bj") return PreconditionerKind::BlockJacobi;
  if (cfg.preconditioner == "none") return PreconditionerKind::None;
  return PreconditionerKind::Bddc;
}

MeshTopology make_mesh(const GeometryConfig& g) {
  if (g.kind == "ellipsoid") return build_ellipsoid(g.nx, g.ny, g.nz, g.ellipsoid);
  return build_slab(g.nx, g.ny, g.nz, g.extents);
}

Problem make_problem(const RunConfig& cfg) {
  cfg.validate();
  return build_problem(make_mesh(cfg.geometry), cfg.conductivity, cfg.ionic, cfg.px,
                       cfg.py, cfg.pz, primal_config(cfg), cfg.geometry.ellipsoid);
}

SolverOptions make_solver_options(const RunConfig& cfg) {
  SolverOptions o;
  o.gmres = cfg.gmres;
  o.newton = cfg.newton;
  o.precond = preconditioner_kind(cfg);
  o.scaling = scaling_kind(cfg);
  o.deluxe_sym_minors = cfg.deluxe_sym_minors;
  o.assembly.lump_ionic = cfg.lump_ionic;
  o.threads = cfg.threads;
  o.deterministic = cfg.deterministic;
  return o;
}

StimulusProtocol make_protocol(const RunConfig& cfg) {
  if (cfg.stimulus.placement == "endocardial" && cfg.geometry.kind == "ellipsoid")
    return StimulusProtocol::endocardial(cfg.geometry.ellipsoid, cfg.stimulus.sites,
                                         cfg.stimulus.radius, cfg.stimulus.amplitude,
                                         cfg.stimulus.duration);
  return StimulusProtocol::slab_corner(cfg.stimulus.amplitude, cfg.stimulus.duration,
                                       cfg.stimulus.radius);
}

TimeLoopConfig make_loop(const RunConfig& cfg) {
  TimeLoopConfig l;
  l.t_end = cfg.t_end;
  l.tau = cfg.tau;
  l.snapshot_every = cfg.snapshot_every;
  return l;
}

}  // namespace bidomain
