#include "starspec/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <utility>

namespace starspec {

namespace {

/// Largest angular step between neighbouring nodes of one ring.
constexpr double kMaxAngularStep = kPi / 8.0;

struct Ring {
  double r = 0.0;
  double spacing = 0.0;  // distance to the next ring outwards
};

std::vector<Ring> ring_lattice(const MeshParams& p) {
  validate(p);
  std::vector<double> radii{0.0};
  long first = 0;
  if (p.grading > 1.0) {
    const double rho = std::min(p.core_radius, p.R);
    const long m = std::max(1L, std::lround(rho / p.h));
    const double rho_eff = static_cast<double>(m) * p.h;
    const long mg = static_cast<long>(std::ceil(p.grading * static_cast<double>(m) - 1e-9));
    for (long i = 1; i <= mg; ++i)
      radii.push_back(rho_eff * std::pow(static_cast<double>(i) / static_cast<double>(mg), p.grading));
    radii.back() = rho_eff;
    first = m;
  }
  const long last = std::lround(p.R / p.h);
  for (long k = first + 1; k <= last; ++k) radii.push_back(static_cast<double>(k) * p.h);
  if (radii.size() < 4)
    throw MeshError("mesh needs at least three rings; decrease h relative to R");

  std::vector<Ring> rings(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    rings[i].r = radii[i];
    rings[i].spacing = (i + 1 < radii.size()) ? radii[i + 1] - radii[i] : p.h;
  }
  return rings;
}

/// Angular offsets in [0, phi] of the nodes of one ring in a half-sector,
/// measured from the interface ray towards the bisector.
std::vector<double> half_ring_offsets(double phi, const Ring& ring, const MeshParams& p) {
  const double r = ring.r;
  const double arc = phi * r;
  const double s0 = ring.spacing;
  const double cap = std::max(s0, std::min(p.max_aspect * s0, r * kMaxAngularStep));
  const int n_min = std::max(2, static_cast<int>(std::ceil(phi / kMaxAngularStep - 1e-12)));

  std::vector<double> steps;
  double sum = 0.0;
  double cur = s0;
  while (cur < cap * (1.0 - 1e-9) && sum + cur < arc * (1.0 - 1e-9)) {
    steps.push_back(cur);
    sum += cur;
    cur *= p.growth;
  }
  double rest = arc - sum;
  if (!steps.empty() && rest < 0.5 * steps.back() * (1.0 - 1e-9)) {
    rest += steps.back();
    steps.pop_back();
  }
  const double target = std::min(cap, cur);
  const long n_rest = std::max(1L, static_cast<long>(std::floor(rest / target + 0.5 + 1e-9)));
  for (long i = 0; i < n_rest; ++i) steps.push_back(rest / static_cast<double>(n_rest));

  if (static_cast<int>(steps.size()) < n_min) steps.assign(n_min, arc / n_min);

  std::vector<double> offsets(steps.size() + 1, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    acc += steps[i];
    offsets[i + 1] = acc / r;
  }
  offsets.back() = phi;
  return offsets;
}

/// Node of a half-sector: ring 0 is the corner.
struct NodeRef {
  int ring = 0;
  int idx = 0;
};
using LocalTriangle = std::array<NodeRef, 3>;

struct HalfSector {
  double phi = 0.0;
  std::vector<std::vector<double>> offsets;  // per ring; empty for ring 0
  std::vector<LocalTriangle> triangles;
};

Eigen::Vector2d local_point(const HalfSector& hs, const std::vector<Ring>& rings, NodeRef n) {
  if (n.ring == 0) return Eigen::Vector2d::Zero();
  const double r = rings[n.ring].r;
  const double o = hs.offsets[n.ring][n.idx];
  return {r * std::cos(o), r * std::sin(o)};
}

HalfSector build_half_sector(double phi, const std::vector<Ring>& rings, const MeshParams& p) {
  HalfSector hs;
  hs.phi = phi;
  hs.offsets.resize(rings.size());
  for (std::size_t i = 1; i < rings.size(); ++i) hs.offsets[i] = half_ring_offsets(phi, rings[i], p);

  // Fan around the corner.
  const int n1 = static_cast<int>(hs.offsets[1].size());
  for (int k = 0; k + 1 < n1; ++k) hs.triangles.push_back({NodeRef{0, 0}, NodeRef{1, k}, NodeRef{1, k + 1}});

  // Zipper between consecutive rings, always closing the shorter diagonal.
  for (int ring = 1; ring + 1 < static_cast<int>(rings.size()); ++ring) {
    const int na = static_cast<int>(hs.offsets[ring].size()) - 1;
    const int nb = static_cast<int>(hs.offsets[ring + 1].size()) - 1;
    int i = 0;
    int j = 0;
    while (i < na || j < nb) {
      bool advance_inner;
      if (i == na) {
        advance_inner = false;
      } else if (j == nb) {
        advance_inner = true;
      } else {
        const double d_inner =
            (local_point(hs, rings, {ring, i + 1}) - local_point(hs, rings, {ring + 1, j})).squaredNorm();
        const double d_outer =
            (local_point(hs, rings, {ring, i}) - local_point(hs, rings, {ring + 1, j + 1})).squaredNorm();
        // Near-ties are broken by index so that the choice does not depend on
        // rounding, which keeps the triangulation identical under scaling.
        if (std::abs(d_inner - d_outer) <= 1e-9 * std::max(d_inner, d_outer))
          advance_inner = static_cast<long>(i + 1) * nb <= static_cast<long>(j + 1) * na;
        else
          advance_inner = d_inner < d_outer;
      }
      if (advance_inner) {
        hs.triangles.push_back({NodeRef{ring, i}, NodeRef{ring + 1, j}, NodeRef{ring, i + 1}});
        ++i;
      } else {
        hs.triangles.push_back({NodeRef{ring, i}, NodeRef{ring + 1, j}, NodeRef{ring + 1, j + 1}});
        ++j;
      }
    }
  }
  return hs;
}

double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a;
  const Eigen::Vector2d v = c - a;
  return 0.5 * (u.x() * v.y() - u.y() * v.x());
}

void push_triangle(CrackMesh& mesh, int a, int b, int c, int tag) {
  const double area = signed_area(mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
  const double scale = std::max({(mesh.vertices[b] - mesh.vertices[a]).squaredNorm(),
                                 (mesh.vertices[c] - mesh.vertices[a]).squaredNorm(),
                                 (mesh.vertices[c] - mesh.vertices[b]).squaredNorm()});
  if (std::abs(area) <= 1e-10 * scale) throw MeshError("degenerate triangle generated");
  if (area < 0.0) std::swap(b, c);
  mesh.triangles.emplace_back(a, b, c);
  mesh.triangle_sector.push_back(tag);
}

/// Global vertex ids of a placed half-sector, ids[ring][idx]; ring 0 holds the corner.
using PlacedIds = std::vector<std::vector<int>>;

/// Places a half-sector whose interface ray is at `ray` and whose nodes lie at
/// angle ray + direction*offset. Nodes listed in `shared` (keyed by ring, for
/// the bisector index) and the corner `origin` are reused instead of created.
PlacedIds place_half(CrackMesh& mesh, const HalfSector& hs, const std::vector<Ring>& rings,
                     double ray, int direction, int origin, const std::vector<int>* shared_bisector) {
  PlacedIds ids(rings.size());
  ids[0] = {origin};
  for (std::size_t ring = 1; ring < rings.size(); ++ring) {
    const auto& offs = hs.offsets[ring];
    ids[ring].resize(offs.size());
    for (std::size_t k = 0; k < offs.size(); ++k) {
      if (shared_bisector && k + 1 == offs.size()) {
        ids[ring][k] = (*shared_bisector)[ring];
        continue;
      }
      const double ang = direction > 0 ? ray + offs[k] : ray - offs[k];
      ids[ring][k] = mesh.dof_count();
      mesh.vertices.emplace_back(rings[ring].r * std::cos(ang), rings[ring].r * std::sin(ang));
    }
  }
  return ids;
}

void emit_triangles(CrackMesh& mesh, const HalfSector& hs, const PlacedIds& ids, int tag) {
  for (const auto& t : hs.triangles)
    push_triangle(mesh, ids[t[0].ring][t[0].idx], ids[t[1].ring][t[1].idx], ids[t[2].ring][t[2].idx], tag);
}

/// Ids along the interface ray (offset 0), corner first.
std::vector<int> ray_chain(const PlacedIds& ids) {
  std::vector<int> out;
  for (const auto& ring : ids) out.push_back(ring.front());
  return out;
}

/// Ids along the bisector (last offset), corner first.
std::vector<int> bisector_chain(const PlacedIds& ids) {
  std::vector<int> out;
  for (const auto& ring : ids) out.push_back(ring.back());
  return out;
}

void add_chain_edges(std::vector<Edge>& group, const std::vector<int>& chain) {
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) group.push_back(Edge{chain[i], chain[i + 1]});
}

/// Outer ring of a full sector, left half then mirrored half.
void add_outer_edges(std::vector<Edge>& group, const std::vector<int>& ring) {
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) group.push_back(Edge{ring[i], ring[i + 1]});
}

struct PlacedSector {
  PlacedIds left;
  PlacedIds right;
};

/// Full sector from `start` to start + 2 phi as two mirrored half-sectors.
PlacedSector place_sector(CrackMesh& mesh, const HalfSector& hs, const std::vector<Ring>& rings,
                          double start, int tag) {
  const int origin = mesh.dof_count();
  mesh.vertices.emplace_back(0.0, 0.0);
  PlacedSector ps;
  ps.left = place_half(mesh, hs, rings, start, +1, origin, nullptr);
  const auto bis = bisector_chain(ps.left);
  ps.right = place_half(mesh, hs, rings, start + 2.0 * hs.phi, -1, origin, &bis);
  emit_triangles(mesh, hs, ps.left, tag);
  emit_triangles(mesh, hs, ps.right, tag);
  return ps;
}

std::vector<int> outer_ring_of(const PlacedSector& ps) {
  std::vector<int> ring = ps.left.back();
  const auto& right = ps.right.back();
  for (auto it = right.rbegin() + 1; it != right.rend(); ++it) ring.push_back(*it);
  return ring;
}

void check_resolution(double phi, double radius, double h) {
  if (2.0 * phi * radius / h < 3.0)
    throw MeshError("h too large to resolve the smallest sector (fewer than 3 angular subdivisions)");
}

void apply_outer_condition(CrackMesh& mesh, const MeshParams& p) {
  if (p.outer == OuterCondition::dirichlet) mesh.dirichlet_groups.push_back("outer");
}

/// Makes the minus copy of each crack pair bit-identical to the plus copy.
void sync_pair_coordinates(CrackMesh& mesh) {
  for (const auto& cp : mesh.crack_pairs) mesh.vertices[cp.minus] = mesh.vertices[cp.plus];
}

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

}  // namespace

MeshParams MeshParams::scaled(double factor) const {
  MeshParams p = *this;
  p.R *= factor;
  p.h *= factor;
  p.core_radius *= factor;
  return p;
}

void validate(const MeshParams& p) {
  if (!(p.R > 0.0)) throw MeshError("mesh radius R must be positive");
  if (!(p.h > 0.0 && p.h < p.R)) throw MeshError("mesh size h must satisfy 0 < h < R");
  if (!(p.grading >= 1.0)) throw MeshError("grading exponent must be >= 1");
  if (!(p.core_radius > 0.0)) throw MeshError("core radius must be positive");
  if (!(p.growth >= 1.0)) throw MeshError("growth factor must be >= 1");
  if (!(p.max_aspect >= 1.0)) throw MeshError("max_aspect must be >= 1");
}

const std::vector<Edge>& CrackMesh::group(const std::string& name) const {
  auto it = edge_groups.find(name);
  if (it == edge_groups.end()) throw MeshError("unknown edge group: " + name);
  return it->second;
}

std::string branch_group(int branch, bool plus_side) {
  return "branch_" + std::to_string(branch) + (plus_side ? "_plus" : "_minus");
}

std::vector<double> ring_radii(const MeshParams& params) {
  std::vector<double> out;
  for (const auto& r : ring_lattice(params)) out.push_back(r.r);
  return out;
}

CrackMesh build_star_mesh(const StarGraph& graph, const MeshParams& params) {
  const auto rings = ring_lattice(params);
  const auto secs = sectors(graph);
  const int m = graph.branch_count();

  CrackMesh mesh;
  mesh.kind = MeshKind::star;
  mesh.radius = rings.back().r;
  for (const auto& s : secs) check_resolution(s.half_opening, mesh.radius, params.h);

  std::map<double, HalfSector> cache;
  std::vector<PlacedSector> placed;
  for (int j = 0; j < m; ++j) {
    const double phi = secs[j].half_opening;
    auto it = cache.find(phi);
    if (it == cache.end()) it = cache.emplace(phi, build_half_sector(phi, rings, params)).first;
    placed.push_back(place_sector(mesh, it->second, rings, centered_angle(secs[j].start_angle), j));
    mesh.origin_copies.push_back(placed.back().left[0][0]);
  }

  mesh.branch_plus_sector.resize(m);
  mesh.branch_minus_sector.resize(m);
  auto& outer = mesh.edge_groups["outer"];
  for (int k = 0; k < m; ++k) {
    const int plus_sector = k;
    const int minus_sector = (k + m - 1) % m;
    mesh.branch_plus_sector[k] = plus_sector;
    mesh.branch_minus_sector[k] = minus_sector;
    const auto plus_chain = ray_chain(placed[plus_sector].left);
    const auto minus_chain = ray_chain(placed[minus_sector].right);
    add_chain_edges(mesh.edge_groups[branch_group(k, true)], plus_chain);
    add_chain_edges(mesh.edge_groups[branch_group(k, false)], minus_chain);
    for (std::size_t i = 1; i < plus_chain.size(); ++i)
      mesh.crack_pairs.push_back(CrackPair{plus_chain[i], minus_chain[i], k});
  }
  for (const auto& ps : placed) add_outer_edges(outer, outer_ring_of(ps));

  sync_pair_coordinates(mesh);
  apply_outer_condition(mesh, params);
  return mesh;
}

CrackMesh build_sector_mesh(double half_opening, const MeshParams& params) {
  if (!(half_opening > 0.0 && half_opening < kPi))
    throw MeshError("sector half-opening must lie in (0, pi)");
  const auto rings = ring_lattice(params);
  CrackMesh mesh;
  mesh.kind = MeshKind::sector;
  mesh.radius = rings.back().r;
  check_resolution(half_opening, mesh.radius, params.h);

  const HalfSector hs = build_half_sector(half_opening, rings, params);
  const PlacedSector ps = place_sector(mesh, hs, rings, -half_opening, 0);
  mesh.origin_copies.push_back(ps.left[0][0]);
  auto& robin = mesh.edge_groups["robin"];
  add_chain_edges(robin, ray_chain(ps.left));
  add_chain_edges(robin, ray_chain(ps.right));
  add_outer_edges(mesh.edge_groups["outer"], outer_ring_of(ps));
  apply_outer_condition(mesh, params);
  return mesh;
}

CrackMesh build_half_domain_mesh(double theta, const MeshParams& params, HalfBoundary boundary) {
  if (!(theta > 0.0 && theta < 0.5 * kPi))
    throw MeshError("half-domain angle must lie in (0, pi/2)");
  const auto rings = ring_lattice(params);
  CrackMesh mesh;
  mesh.kind = MeshKind::half_domain;
  mesh.radius = rings.back().r;
  check_resolution(theta, mesh.radius, params.h);

  // Tag 0: image of the upper half of the obtuse sector (counterclockwise of
  // the crack). Tag 1: image of the upper half of the acute sector.
  const HalfSector obtuse = build_half_sector(kPi - theta, rings, params);
  const HalfSector acute = build_half_sector(theta, rings, params);
  const double ray = 0.5 * kPi;

  const int origin_plus = mesh.dof_count();
  mesh.vertices.emplace_back(0.0, 0.0);
  const PlacedIds plus = place_half(mesh, obtuse, rings, ray, +1, origin_plus, nullptr);
  const int origin_minus = mesh.dof_count();
  mesh.vertices.emplace_back(0.0, 0.0);
  const PlacedIds minus = place_half(mesh, acute, rings, ray, -1, origin_minus, nullptr);
  emit_triangles(mesh, obtuse, plus, 0);
  emit_triangles(mesh, acute, minus, 1);

  mesh.origin_copies = {origin_plus, origin_minus};
  mesh.branch_plus_sector = {0};
  mesh.branch_minus_sector = {1};
  const auto plus_chain = ray_chain(plus);
  const auto minus_chain = ray_chain(minus);
  add_chain_edges(mesh.edge_groups[branch_group(0, true)], plus_chain);
  add_chain_edges(mesh.edge_groups[branch_group(0, false)], minus_chain);
  for (std::size_t i = 1; i < plus_chain.size(); ++i)
    mesh.crack_pairs.push_back(CrackPair{plus_chain[i], minus_chain[i], 0});

  auto& axis = mesh.edge_groups["symmetry_axis"];
  add_chain_edges(axis, bisector_chain(plus));
  add_chain_edges(axis, bisector_chain(minus));

  // The two outer arcs meet only at the crack tip's far end, which is duplicated.
  auto& outer = mesh.edge_groups["outer"];
  add_outer_edges(outer, plus.back());
  add_outer_edges(outer, minus.back());

  sync_pair_coordinates(mesh);
  apply_outer_condition(mesh, params);
  if (boundary == HalfBoundary::dirichlet) mesh.dirichlet_groups.push_back("symmetry_axis");
  return mesh;
}

CrackMesh refine(const CrackMesh& mesh) {
  CrackMesh out;
  out.kind = mesh.kind;
  out.radius = mesh.radius;
  out.vertices = mesh.vertices;
  out.origin_copies = mesh.origin_copies;
  out.branch_plus_sector = mesh.branch_plus_sector;
  out.branch_minus_sector = mesh.branch_minus_sector;
  out.dirichlet_groups = mesh.dirichlet_groups;

  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = out.dof_count();
    out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    mid.emplace(key, id);
    return id;
  };

  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const int a = tri[0], b = tri[1], c = tri[2];
    const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    const int tag = mesh.triangle_sector[t];
    for (const auto& sub : {Eigen::Vector3i(a, ab, ca), Eigen::Vector3i(ab, b, bc), Eigen::Vector3i(ca, bc, c),
                            Eigen::Vector3i(ab, bc, ca)}) {
      out.triangles.push_back(sub);
      out.triangle_sector.push_back(tag);
    }
  }

  for (const auto& [name, edges] : mesh.edge_groups) {
    auto& dst = out.edge_groups[name];
    for (const auto& e : edges) {
      auto it = mid.find(edge_key(e.a, e.b));
      if (it == mid.end()) throw MeshError("edge group '" + name + "' references a non-mesh edge");
      dst.push_back(Edge{e.a, it->second});
      dst.push_back(Edge{it->second, e.b});
    }
  }

  out.crack_pairs = mesh.crack_pairs;
  const auto partners = branch_partners(mesh);
  for (int k = 0; k < mesh.branch_count(); ++k) {
    for (const auto& e : mesh.group(branch_group(k, true))) {
      const auto pa = partners[k].find(e.a);
      const auto pb = partners[k].find(e.b);
      if (pa == partners[k].end() || pb == partners[k].end())
        throw MeshError("interface edge without crack partner");
      const auto mp = mid.find(edge_key(e.a, e.b));
      const auto mm = mid.find(edge_key(pa->second, pb->second));
      if (mm == mid.end()) throw MeshError("interface edge has no matching edge on the minus side");
      out.crack_pairs.push_back(CrackPair{mp->second, mm->second, k});
    }
  }
  sync_pair_coordinates(out);
  return out;
}

CrackMesh scaled(const CrackMesh& mesh, double factor) {
  if (!(factor > 0.0)) throw MeshError("scale factor must be positive");
  CrackMesh out = mesh;
  for (auto& v : out.vertices) v *= factor;
  out.radius *= factor;
  return out;
}

std::vector<int> vertex_sectors(const CrackMesh& mesh) {
  std::vector<int> tag(mesh.dof_count(), -1);
  for (int t = 0; t < mesh.triangle_count(); ++t)
    for (int i = 0; i < 3; ++i) {
      int& s = tag[mesh.triangles[t][i]];
      if (s == -1)
        s = mesh.triangle_sector[t];
      else if (s != mesh.triangle_sector[t])
        throw MeshError("vertex shared by triangles of different sectors");
    }
  return tag;
}

std::vector<std::unordered_map<int, int>> branch_partners(const CrackMesh& mesh) {
  std::vector<std::unordered_map<int, int>> maps(mesh.branch_count());
  for (const auto& cp : mesh.crack_pairs) {
    if (cp.branch < 0 || cp.branch >= mesh.branch_count()) throw MeshError("crack pair with invalid branch id");
    maps[cp.branch][cp.plus] = cp.minus;
  }
  for (int k = 0; k < mesh.branch_count(); ++k) {
    const int ps = mesh.branch_plus_sector[k];
    const int ms = mesh.branch_minus_sector[k];
    if (ps >= 0 && ms >= 0 && ps < mesh.sector_count() && ms < mesh.sector_count())
      maps[k][mesh.origin_copies[ps]] = mesh.origin_copies[ms];
  }
  return maps;
}

int euler_characteristic(const CrackMesh& mesh) {
  // Glue interface copies with a union-find on vertex ids.
  std::vector<int> parent(mesh.dof_count());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (const auto& cp : mesh.crack_pairs) unite(cp.plus, cp.minus);
  for (std::size_t i = 1; i < mesh.origin_copies.size(); ++i) unite(mesh.origin_copies[0], mesh.origin_copies[i]);

  std::set<int> verts;
  std::set<std::pair<int, int>> edges;
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      const int a = find(t[i]);
      const int b = find(t[(i + 1) % 3]);
      verts.insert(a);
      edges.insert(edge_key(a, b));
    }
  }
  return static_cast<int>(verts.size()) - static_cast<int>(edges.size()) + mesh.triangle_count();
}

void validate(const CrackMesh& mesh) {
  const int n = mesh.dof_count();
  if (mesh.triangle_sector.size() != mesh.triangles.size())
    throw MeshError("triangle sector tags missing");
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i)
      if (t[i] < 0 || t[i] >= n) throw MeshError("triangle references missing vertex");
    if (!(signed_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) > 0.0))
      throw MeshError("triangle with non-positive signed area");
  }
  const auto tag = vertex_sectors(mesh);

  std::vector<int> pair_count(n, 0);
  for (const auto& cp : mesh.crack_pairs) {
    if (mesh.vertices[cp.plus] != mesh.vertices[cp.minus])
      throw MeshError("crack pair copies have different coordinates");
    if (tag[cp.plus] != mesh.branch_plus_sector[cp.branch] || tag[cp.minus] != mesh.branch_minus_sector[cp.branch])
      throw MeshError("crack pair copy belongs to the wrong sector");
    ++pair_count[cp.plus];
    ++pair_count[cp.minus];
  }
  std::set<int> origins(mesh.origin_copies.begin(), mesh.origin_copies.end());
  for (int k = 0; k < mesh.branch_count(); ++k)
    for (bool plus : {true, false})
      for (const auto& e : mesh.group(branch_group(k, plus)))
        for (int v : {e.a, e.b})
          if (!origins.count(v) && pair_count[v] != 1)
            throw MeshError("interface vertex not in exactly one crack pair");

  std::map<std::pair<int, int>, int> edge_use;
  for (const auto& t : mesh.triangles)
    for (int i = 0; i < 3; ++i) ++edge_use[edge_key(t[i], t[(i + 1) % 3])];
  for (const auto& [e, c] : edge_use)
    if (c > 2) throw MeshError("edge shared by more than two triangles");
  for (const auto& [name, edges] : mesh.edge_groups)
    for (const auto& e : edges) {
      auto it = edge_use.find(edge_key(e.a, e.b));
      if (it == edge_use.end()) throw MeshError("edge group '" + name + "' contains a non-mesh edge");
      if (it->second != 1) throw MeshError("edge group '" + name + "' contains an interior edge");
    }

  if (euler_characteristic(mesh) != 1) throw MeshError("Euler relation V - E + F = 1 violated");
}

std::vector<int> group_vertices(const CrackMesh& mesh, const std::vector<std::string>& groups) {
  std::set<int> out;
  for (const auto& g : groups)
    for (const auto& e : mesh.group(g)) {
      out.insert(e.a);
      out.insert(e.b);
    }
  return {out.begin(), out.end()};
}

std::vector<int> constrained_dofs(const CrackMesh& mesh) { return group_vertices(mesh, mesh.dirichlet_groups); }

Eigen::VectorXd interpolate(const CrackMesh& mesh, const std::function<double(const Eigen::Vector2d&)>& f) {
  Eigen::VectorXd u(mesh.dof_count());
  for (int i = 0; i < mesh.dof_count(); ++i) u[i] = f(mesh.vertices[i]);
  return u;
}

Eigen::VectorXd interpolate(const CrackMesh& mesh,
                            const std::function<double(const Eigen::Vector2d&, int)>& f) {
  const auto tag = vertex_sectors(mesh);
  Eigen::VectorXd u(mesh.dof_count());
  for (int i = 0; i < mesh.dof_count(); ++i) u[i] = f(mesh.vertices[i], tag[i]);
  return u;
}

void write_mesh(std::ostream& os, const CrackMesh& mesh) {
  const auto old_precision = os.precision(17);
  for (const auto& v : mesh.vertices) os << "v " << v.x() << ' ' << v.y() << '\n';
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    os << "t " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << mesh.triangle_sector[t] << '\n';
  }
  for (const auto& cp : mesh.crack_pairs) os << "c " << cp.plus << ' ' << cp.minus << ' ' << cp.branch << '\n';
  os.precision(old_precision);
}

}  // namespace starspec
