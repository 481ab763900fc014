#include "dcpviz/contour.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace dcpviz::contour {

std::string to_code(Errc errc) {
    switch (errc) {
    case Errc::GridTooSmall: return "grid_too_small";
    case Errc::InvalidBands: return "invalid_bands";
    case Errc::BadGeoJson: return "bad_geojson";
    case Errc::UnknownRamp: return "unknown_ramp";
    case Errc::RenderFailed: return "render_failed";
    case Errc::Internal: return "internal";
    }
    return "unknown";
}

void BandSpec::validate() const {
    if (thresholds.size() < 2) throw ContourError(Errc::InvalidBands, "a band spec needs at least 2 thresholds");
    if (thresholds.size() > 256) throw ContourError(Errc::InvalidBands, "at most 256 thresholds are supported");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!std::isfinite(thresholds[i])) throw ContourError(Errc::InvalidBands, "non-finite threshold");
        if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
            throw ContourError(Errc::InvalidBands, "thresholds must be strictly ascending");
    }
}

BandSpec BandSpec::uniform(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi > lo)) throw ContourError(Errc::InvalidBands, "uniform bands need lo < hi and step > 0");
    BandSpec spec;
    auto n = static_cast<long>(std::llround((hi - lo) / step));
    for (long k = 0; k <= n; ++k) spec.thresholds.push_back(lo + static_cast<double>(k) * step);
    spec.validate();
    return spec;
}

BandSpec BandSpec::default_precipitation() { return uniform(0.0, 14.0, 2.0); }
BandSpec BandSpec::default_temperature() { return uniform(-20.0, 45.0, 5.0); }

BandSpec BandSpec::default_for(grid::ClimateVariable v) {
    return v == grid::ClimateVariable::Pr ? default_precipitation() : default_temperature();
}

std::uint64_t band_spec_hash(const BandSpec& spec) {
    std::uint64_t h = 1469598103934665603ull;
    for (double t : spec.thresholds) {
        auto bits = std::bit_cast<std::uint64_t>(t);
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xFF;
            h *= 1099511628211ull;
        }
    }
    return h;
}

double ring_area(const Ring& ring) {
    if (ring.empty()) return 0.0;
    // relative to the first vertex so tiny rings far from the origin keep their sign
    const Point o = ring.front();
    double a = 0.0;
    for (std::size_t k = 0; k + 1 < ring.size(); ++k)
        a += (ring[k].lon - o.lon) * (ring[k + 1].lat - o.lat) - (ring[k + 1].lon - o.lon) * (ring[k].lat - o.lat);
    return 0.5 * a;
}

double polygon_area(const Polygon& p) {
    double a = ring_area(p.outer);
    for (const auto& h : p.holes) a += ring_area(h);
    return a;
}

namespace {

// Vertex identities. Crossings are keyed by grid edge and threshold so both
// cells sharing an edge name the same point; arc samples are cell-private.
constexpr std::uint64_t kNodeTag = 0;
constexpr std::uint64_t kCrossTag = 1;
constexpr std::uint64_t kArcTag = 2;

std::uint64_t node_key(std::size_t n) { return (kNodeTag << 62) | n; }
std::uint64_t cross_key(bool vertical, std::size_t edge, std::size_t level) {
    return (kCrossTag << 62) | (static_cast<std::uint64_t>(vertical) << 61) | (static_cast<std::uint64_t>(level) << 50) |
           edge;
}
std::uint64_t arc_key(std::uint64_t serial) { return (kArcTag << 62) | serial; }

struct Vertex {
    std::uint64_t key;
    Point p;
};

struct Edge {
    Vertex from;
    Vertex to;
};

struct Local {
    double s;
    double t;
};

// CCW cell sides: 0 bottom (00->01), 1 right (01->11), 2 top (11->10), 3 left (10->00).
// Corners in CCW order: 0 = (i,j), 1 = (i,j+1), 2 = (i+1,j+1), 3 = (i+1,j).

class BandTracer {
public:
    BandTracer(const grid::GridSnapshot& g, const BandSpec& spec, const ContourOptions& opt)
        : g_(g), spec_(spec), opt_(opt), rows_(g.rows()), cols_(g.cols()) {
        valid_.assign((rows_ - 1) * (cols_ - 1), 0);
        for (std::size_t i = 0; i + 1 < rows_; ++i)
            for (std::size_t j = 0; j + 1 < cols_; ++j)
                valid_[i * (cols_ - 1) + j] = !g.is_missing(i, j) && !g.is_missing(i, j + 1) &&
                                              !g.is_missing(i + 1, j) && !g.is_missing(i + 1, j + 1);
    }

    std::vector<Polygon> band(std::size_t b) {
        edges_.clear();
        const double lo = spec_.thresholds[b], hi = spec_.thresholds[b + 1];
        for (std::size_t i = 0; i + 1 < rows_; ++i)
            for (std::size_t j = 0; j + 1 < cols_; ++j)
                if (valid_[i * (cols_ - 1) + j]) cell(i, j, b, lo, hi);
        return assemble(trace());
    }

private:
    const grid::GridSnapshot& g_;
    const BandSpec& spec_;
    const ContourOptions& opt_;
    std::size_t rows_, cols_;
    std::vector<std::uint8_t> valid_;
    std::vector<Edge> edges_;
    std::uint64_t arc_serial_ = 0;

    bool cell_valid(long i, long j) const {
        if (i < 0 || j < 0 || i + 1 >= static_cast<long>(rows_) || j + 1 >= static_cast<long>(cols_)) return false;
        return valid_[static_cast<std::size_t>(i) * (cols_ - 1) + static_cast<std::size_t>(j)] != 0;
    }

    double v(std::size_t i, std::size_t j) const { return g_.at(i, j); }

    Vertex node(std::size_t i, std::size_t j) const { return {node_key(i * cols_ + j), {g_.lon[j], g_.lat[i]}}; }

    // Crossing of `level` on the horizontal edge (i,j)-(i,j+1) or the vertical
    // edge (i,j)-(i+1,j), computed from the edge's canonical direction.
    Vertex crossing(bool vertical, std::size_t i, std::size_t j, std::size_t level, double& frac) const {
        const double c = spec_.thresholds[level];
        const double a = v(i, j);
        const double b = vertical ? v(i + 1, j) : v(i, j + 1);
        frac = std::clamp((c - a) / (b - a), 0.0, 1.0);
        Point p;
        if (vertical) {
            p = {g_.lon[j], g_.lat[i] + frac * (g_.lat[i + 1] - g_.lat[i])};
            return {cross_key(true, i * cols_ + j, level), p};
        }
        p = {g_.lon[j] + frac * (g_.lon[j + 1] - g_.lon[j]), g_.lat[i]};
        return {cross_key(false, i * (cols_ - 1) + j, level), p};
    }

    // Crossing on cell side `side`, with its position in cell-local coordinates.
    Vertex side_crossing(std::size_t i, std::size_t j, int side, std::size_t level, Local& at) const {
        double f = 0.0;
        Vertex x;
        switch (side) {
        case 0: x = crossing(false, i, j, level, f); at = {f, 0.0}; break;
        case 1: x = crossing(true, i, j + 1, level, f); at = {1.0, f}; break;
        case 2: x = crossing(false, i + 1, j, level, f); at = {f, 1.0}; break;
        default: x = crossing(true, i, j, level, f); at = {0.0, f}; break;
        }
        return x;
    }

    Point to_global(std::size_t i, std::size_t j, Local l) const {
        return {g_.lon[j] + l.s * (g_.lon[j + 1] - g_.lon[j]), g_.lat[i] + l.t * (g_.lat[i + 1] - g_.lat[i])};
    }

    void cell(std::size_t i, std::size_t j, std::size_t b, double lo, double hi) {
        const double c[4] = {v(i, j), v(i, j + 1), v(i + 1, j + 1), v(i + 1, j)};
        auto state = [&](double x) { return x < lo ? 0 : (x < hi ? 1 : 2); };
        int s[4];
        bool all_below = true, all_above = true;
        for (int k = 0; k < 4; ++k) {
            s[k] = state(c[k]);
            all_below &= s[k] == 0;
            all_above &= s[k] == 2;
        }
        // a bilinear patch stays within its corner range
        if (all_below || all_above) return;

        arcs(i, j, c, b, /*upper=*/false);
        arcs(i, j, c, b + 1, /*upper=*/true);

        const long li = static_cast<long>(i), lj = static_cast<long>(j);
        const bool border[4] = {!cell_valid(li - 1, lj), !cell_valid(li, lj + 1), !cell_valid(li + 1, lj),
                                !cell_valid(li, lj - 1)};
        const Vertex corner[4] = {node(i, j), node(i, j + 1), node(i + 1, j + 1), node(i + 1, j)};
        for (int side = 0; side < 4; ++side) {
            if (!border[side]) continue;
            const int a = side, z = (side + 1) % 4;
            // threshold crossings along the side in walking order
            std::vector<std::pair<std::size_t, int>> cuts; // (level, new state)
            const bool up = c[z] > c[a];
            for (int pass = 0; pass < 2; ++pass) {
                bool lower = up ? pass == 0 : pass == 1;
                std::size_t level = lower ? b : b + 1;
                double t = spec_.thresholds[level];
                if ((c[a] >= t) == (c[z] >= t)) continue;
                int next = lower ? (up ? 1 : 0) : (up ? 2 : 1);
                cuts.emplace_back(level, next);
            }
            Vertex cur = corner[a];
            int st = s[a];
            for (auto [level, next] : cuts) {
                Local ignored;
                Vertex x = side_crossing(i, j, side, level, ignored);
                if (st == 1) edges_.push_back({cur, x});
                cur = x;
                st = next;
            }
            if (st == 1) edges_.push_back({cur, corner[z]});
        }
    }

    // Iso-line arcs of one threshold inside the cell, oriented so the band
    // lies on their left.
    void arcs(std::size_t i, std::size_t j, const double (&c)[4], std::size_t level, bool upper) {
        const double t = spec_.thresholds[level];
        bool above[4];
        for (int k = 0; k < 4; ++k) above[k] = c[k] >= t;
        if (above[0] == above[1] && above[1] == above[2] && above[2] == above[3]) return;

        struct Cross {
            int side;
            bool rising; // value increases through t walking counterclockwise
            Vertex v;
            Local at;
        };
        Cross x[4];
        int n = 0;
        for (int side = 0; side < 4; ++side) {
            int a = side, z = (side + 1) % 4;
            if (above[a] == above[z]) continue;
            Cross& cr = x[n++];
            cr.side = side;
            cr.rising = above[z];
            cr.v = side_crossing(i, j, side, level, cr.at);
        }

        // f(s,t) = A + B s + C t + D s t
        const double A = c[0], B = c[1] - c[0], C = c[3] - c[0], D = c[0] - c[1] - c[3] + c[2];

        auto emit = [&](const Cross& p, const Cross& q) {
            // lower threshold: band is f >= t, so run from the falling crossing
            // to the rising one; upper threshold: the reverse
            const Cross* from = &p;
            const Cross* to = &q;
            if (p.rising != upper) std::swap(from, to);
            std::vector<Local> pts;
            sample(A, B, C, D, t, from->at, to->at, 0, pts);
            Vertex prev = from->v;
            for (const auto& l : pts) {
                Vertex mid{arc_key(arc_serial_++), to_global(i, j, l)};
                edges_.push_back({prev, mid});
                prev = mid;
            }
            edges_.push_back({prev, to->v});
        };

        if (n == 2) {
            emit(x[0], x[1]);
            return;
        }
        if (n != 4) throw ContourError(Errc::Internal, "odd number of threshold crossings in a cell");
        // Saddle: the diagonal pair whose side of t contains the saddle point
        // stays connected; arcs cut off the two other corners.
        const double w00 = c[0] - t, w01 = c[1] - t, w11 = c[2] - t, w10 = c[3] - t;
        const double den = w00 + w11 - w01 - w10;
        const double saddle_minus_t = (w00 * w11 - w01 * w10) / den;
        const bool connect_above = saddle_minus_t >= 0.0;
        auto on_side = [&](int side) -> const Cross& {
            for (int k = 0; k < 4; ++k)
                if (x[k].side == side) return x[k];
            throw ContourError(Errc::Internal, "missing saddle crossing");
        };
        for (int k = 0; k < 4; ++k) {
            if (above[k] == connect_above) continue;
            emit(on_side((k + 3) % 4), on_side(k));
        }
    }

    // Interior points of the level curve between p and q, in order.
    void sample(double A, double B, double C, double D, double t, Local p, Local q, int depth,
                std::vector<Local>& out) const {
        if (depth >= opt_.max_arc_depth || D == 0.0) return;
        Local m;
        if (std::abs(q.s - p.s) >= std::abs(q.t - p.t)) {
            m.s = 0.5 * (p.s + q.s);
            double den = C + D * m.s;
            if (std::abs(den) < 1e-300) return;
            m.t = (t - A - B * m.s) / den;
        } else {
            m.t = 0.5 * (p.t + q.t);
            double den = B + D * m.t;
            if (std::abs(den) < 1e-300) return;
            m.s = (t - A - C * m.t) / den;
        }
        if (!std::isfinite(m.s) || !std::isfinite(m.t)) return;
        m.s = std::clamp(m.s, 0.0, 1.0);
        m.t = std::clamp(m.t, 0.0, 1.0);
        const double ds = m.s - 0.5 * (p.s + q.s), dt = m.t - 0.5 * (p.t + q.t);
        if (std::hypot(ds, dt) <= opt_.arc_tolerance) return;
        sample(A, B, C, D, t, p, m, depth + 1, out);
        out.push_back(m);
        sample(A, B, C, D, t, m, q, depth + 1, out);
    }

    std::vector<Ring> trace() const {
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> out;
        out.reserve(edges_.size());
        for (std::size_t e = 0; e < edges_.size(); ++e) out[edges_[e].from.key].push_back(e);
        std::vector<std::uint8_t> used(edges_.size(), 0);
        std::vector<Ring> rings;

        auto turn = [](const Point& a, const Point& b, const Point& c) {
            double ux = b.lon - a.lon, uy = b.lat - a.lat, vx = c.lon - b.lon, vy = c.lat - b.lat;
            return std::atan2(ux * vy - uy * vx, ux * vx + uy * vy);
        };

        for (std::size_t e0 = 0; e0 < edges_.size(); ++e0) {
            if (used[e0]) continue;
            used[e0] = 1;
            Ring ring{edges_[e0].from.p};
            std::size_t cur = e0;
            for (std::size_t guard = 0;; ++guard) {
                if (guard > edges_.size()) throw ContourError(Errc::Internal, "ring tracing did not terminate");
                const auto& ce = edges_[cur];
                ring.push_back(ce.to.p);
                std::size_t best = std::numeric_limits<std::size_t>::max();
                double best_turn = -10.0;
                auto consider = [&](std::size_t cand) {
                    double a = turn(ce.from.p, ce.to.p, edges_[cand].to.p);
                    if (a > best_turn) {
                        best_turn = a;
                        best = cand;
                    }
                };
                if (auto it = out.find(ce.to.key); it != out.end())
                    for (std::size_t cand : it->second)
                        if (!used[cand]) consider(cand);
                bool at_start = ce.to.key == edges_[e0].from.key;
                if (at_start) consider(e0);
                if (best == std::numeric_limits<std::size_t>::max())
                    throw ContourError(Errc::Internal, "open boundary while tracing a band");
                if (best == e0) break;
                used[best] = 1;
                cur = best;
            }
            rings.push_back(std::move(ring));
        }
        return rings;
    }

    static void clean(Ring& ring) {
        // drop the closing point while simplifying
        if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
        bool changed = true;
        while (changed && ring.size() >= 3) {
            changed = false;
            Ring next;
            next.reserve(ring.size());
            for (const auto& p : ring)
                if (next.empty() || !(next.back() == p)) next.push_back(p);
            while (next.size() > 1 && next.front() == next.back()) next.pop_back();
            changed = next.size() != ring.size();
            ring.swap(next);
            if (ring.size() < 3) break;
            const std::size_t n = ring.size();
            next.clear();
            for (std::size_t k = 0; k < n; ++k) {
                const Point& a = next.empty() ? ring[(k + n - 1) % n] : next.back();
                const Point& b = ring[k];
                const Point& c = ring[(k + 1) % n];
                bool straight = (a.lon == b.lon && b.lon == c.lon) || (a.lat == b.lat && b.lat == c.lat);
                if (straight) {
                    changed = true;
                    continue;
                }
                next.push_back(b);
            }
            ring.swap(next);
        }
        if (ring.size() < 3) {
            ring.clear();
            return;
        }
        ring.push_back(ring.front());
    }

    static bool contains(const Ring& ring, Point p) {
        bool inside = false;
        for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
            const Point& a = ring[k];
            const Point& b = ring[k + 1];
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                double x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
                if (p.lon < x) inside = !inside;
            }
        }
        return inside;
    }

    static std::vector<Polygon> assemble(std::vector<Ring> rings) {
        struct Outer {
            Polygon poly;
            double area;
            BBox box;
        };
        std::vector<Outer> outers;
        std::vector<Ring> holes;
        for (auto& r : rings) {
            clean(r);
            if (r.empty()) continue;
            double a = ring_area(r);
            if (a > 0.0) {
                BBox box{r[0].lon, r[0].lat, r[0].lon, r[0].lat};
                for (const auto& p : r) {
                    box.west = std::min(box.west, p.lon);
                    box.east = std::max(box.east, p.lon);
                    box.south = std::min(box.south, p.lat);
                    box.north = std::max(box.north, p.lat);
                }
                outers.push_back({Polygon{std::move(r), {}}, a, box});
            } else if (a < 0.0) {
                holes.push_back(std::move(r));
            }
        }
        std::vector<std::size_t> by_area(outers.size());
        for (std::size_t k = 0; k < by_area.size(); ++k) by_area[k] = k;
        std::stable_sort(by_area.begin(), by_area.end(),
                         [&](std::size_t a, std::size_t b) { return outers[a].area < outers[b].area; });
        for (auto& h : holes) {
            // midpoint of the longest hole edge; never on another ring
            std::size_t longest = 0;
            double len = -1.0;
            for (std::size_t k = 0; k + 1 < h.size(); ++k) {
                double l = std::hypot(h[k + 1].lon - h[k].lon, h[k + 1].lat - h[k].lat);
                if (l > len) {
                    len = l;
                    longest = k;
                }
            }
            Point probe{0.5 * (h[longest].lon + h[longest + 1].lon), 0.5 * (h[longest].lat + h[longest + 1].lat)};
            bool placed = false;
            for (std::size_t k : by_area) {
                const auto& o = outers[k];
                if (probe.lon < o.box.west || probe.lon > o.box.east || probe.lat < o.box.south ||
                    probe.lat > o.box.north)
                    continue;
                if (contains(o.poly.outer, probe)) {
                    outers[k].poly.holes.push_back(std::move(h));
                    placed = true;
                    break;
                }
            }
            if (!placed) throw ContourError(Errc::Internal, "hole without an enclosing ring");
        }
        std::vector<Polygon> out;
        out.reserve(outers.size());
        for (auto& o : outers) out.push_back(std::move(o.poly));
        return out;
    }
};

} // namespace

ContourProduct marching_squares_bands(const grid::GridSnapshot& snapshot, const BandSpec& spec,
                                      const ContourOptions& options) {
    spec.validate();
    if (snapshot.rows() < 2 || snapshot.cols() < 2)
        throw ContourError(Errc::GridTooSmall, "contouring needs at least a 2x2 grid");
    snapshot.validate();

    ContourProduct product;
    product.variable = snapshot.variable;
    product.units = std::string(grid::canonical_units(snapshot.variable));
    product.spec = spec;
    product.rows = snapshot.rows();
    product.cols = snapshot.cols();
    product.bbox = {snapshot.lon.front(), snapshot.lat.front(), snapshot.lon.back(), snapshot.lat.back()};

    BandTracer tracer(snapshot, spec, options);
    for (std::size_t b = 0; b < spec.band_count(); ++b) {
        auto polys = tracer.band(b);
        if (polys.empty()) continue;
        product.bands.push_back({static_cast<int>(b), spec.thresholds[b], spec.thresholds[b + 1], std::move(polys)});
    }
    return product;
}

} // namespace dcpviz::contour
