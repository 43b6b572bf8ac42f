#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "rr/errors.hpp"
#include "rr/integrator.hpp"
#include "rr/kinetic.hpp"
#include "rr/worldline.hpp"

namespace rr {

/// Periodic spatial box [0,L)^3 with a fixed Cartesian binning grid.
struct MomentGrid {
    std::array<double, 3> box{1.0, 1.0, 1.0};
    std::array<int, 3> cells{2, 2, 1};

    int cell_count() const { return cells[0] * cells[1] * cells[2]; }

    int cell_of(const FourVector& r) const {
        int idx = 0;
        for (int d = 0; d < 3; ++d) {
            double x = std::fmod(r[d + 1], box[d]);
            if (x < 0.0) x += box[d];
            int c = static_cast<int>(x / box[d] * cells[d]);
            if (c >= cells[d]) c = cells[d] - 1;
            idx = idx * cells[d] + c;
        }
        return idx;
    }

    double cell_volume() const {
        return box[0] * box[1] * box[2] / static_cast<double>(cell_count());
    }
};

/// State of one particle where its world-line crosses a lab-time slice.
struct SliceState {
    FourVector r;
    FourVector u;
    FourVector a;  // du/ds, contravariant: the deposited force source
    double weight;
};

/// particle-major: crossings[particle][time_index]
using SliceTable = std::vector<std::vector<SliceState>>;

/// Evolves every particle of the ensemble under the given configuration and
/// records its state at each requested lab time (coordinate time r0).
/// Particles advance independently on `threads` workers; each writes only
/// its own slots, so the result is identical for any thread count.
inline SliceTable evolve_to_lab_times(const KineticEnsemble& ensemble,
                                      const IntegratorConfig& cfg,
                                      const std::vector<double>& lab_times,
                                      unsigned threads = 1) {
    cfg.validate();
    if (lab_times.empty()) throw ValidationError("evolve_to_lab_times: no lab times given");
    for (std::size_t i = 1; i < lab_times.size(); ++i)
        if (!(lab_times[i] > lab_times[i - 1]))
            throw ValidationError("evolve_to_lab_times: lab times must increase");

    SliceTable table(ensemble.particles.size());
    const double t_last = lab_times.back();

    const auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t ip = begin; ip < end; ++ip) {
            const auto& par = ensemble.particles[ip];
            WorldlineHistory hist({0.0, par.r, par.u, FourVector{}}, par.u);
            {
                detail::SelfForceEvaluator self(cfg, hist);
                self.begin_step(0.0);
                hist.set_last_acceleration(detail::rhs(cfg, self, 0.0, par.r, par.u).du);
            }
            auto& rows = table[ip];
            rows.reserve(lab_times.size());
            std::size_t next_t = 0;
            // r0 grows at least as fast as s (u0 >= 1)
            while (next_t < lab_times.size()) {
                const double t0 = hist.samples().back().r[0];
                if (t0 >= lab_times[next_t]) {
                    // bisect the crossing within the last step (or take the
                    // initial sample when the slice starts at t = r0(0))
                    double s_hi = hist.frontier();
                    double s_lo = std::max(hist.oldest_retained(), s_hi - cfg.step);
                    if (hist.samples().size() == 1 ||
                        hist.interpolate(s_lo).r[0] > lab_times[next_t]) {
                        s_lo = s_hi;  // slice time at or before the first sample
                    }
                    double a = s_lo, b = s_hi;
                    for (int it = 0; it < 60 && b - a > 1e-15 * (1.0 + b); ++it) {
                        const double mid = 0.5 * (a + b);
                        (hist.interpolate(mid).r[0] < lab_times[next_t] ? a : b) = mid;
                    }
                    const WorldlineSample w = hist.interpolate(0.5 * (a + b));
                    rows.push_back({w.r, w.u, w.a, par.weight});
                    ++next_t;
                    continue;
                }
                if (hist.frontier() > 10.0 * (t_last + 1.0))
                    throw Error("evolve_to_lab_times: particle failed to reach slice time");
                step(hist, cfg);
            }
        }
    };

    if (threads <= 1) {
        work(0, table.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t n = table.size();
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = std::min(n, t * chunk), e = std::min(n, (t + 1) * chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return table;
}

/// Lab-frame deposited moments on a grid cell, per the world-line measure:
/// each crossing contributes 1/gamma-weighted velocity moments and the
/// acceleration-density source term.
struct CellMoments {
    double n = 0.0;                    // sum w / gamma / V
    FourVector N;                      // sum w u / gamma / V
    SymmetricTensor4 T;                // sum w u u / gamma / V
    std::array<double, 4> source{};    // sum w a / gamma / V  (du/ds density)
    double count = 0.0;
};

using GridMoments = std::vector<CellMoments>;

inline GridMoments deposit(const SliceTable& table, std::size_t time_index,
                           const MomentGrid& grid, std::size_t stride = 1,
                           std::size_t offset = 0) {
    GridMoments cells(static_cast<std::size_t>(grid.cell_count()));
    const double inv_v = 1.0 / grid.cell_volume();
    for (std::size_t ip = offset; ip < table.size(); ip += stride) {
        const SliceState& st = table[ip][time_index];
        CellMoments& c = cells[static_cast<std::size_t>(grid.cell_of(st.r))];
        const double f = st.weight / st.u[0] * inv_v;
        c.n += f;
        c.count += 1.0;
        for (int mu = 0; mu < 4; ++mu) {
            c.N[mu] += f * st.u[mu];
            c.source[static_cast<std::size_t>(mu)] += f * st.a[mu];
            for (int nu = mu; nu < 4; ++nu) c.T.at(mu, nu) += f * st.u[mu] * st.u[nu];
        }
    }
    return cells;
}

/// Residuals of the fluid moment equations on the grid, measured from three
/// lab-time slices (central time differences at the middle one):
///   continuity:  d_t N^0 + div_i N^i              ~ 0
///   momentum^nu: d_t T^{0 nu} + div_i T^{i nu} - S^nu ~ 0,
/// with S the deposited acceleration density (for a pure external Lorentz
/// force it equals (q/m0) F^{nu mu} N_mu).
///
/// Statistical errors come from splitting the ensemble into `subsets`
/// independent sub-ensembles and forming the standard error of the subset
/// mean, which honestly accounts for the correlation between time slices.
struct MomentResiduals {
    // per grid cell: residual mean, standard error
    std::vector<double> continuity, continuity_se;
    std::vector<std::array<double, 4>> momentum, momentum_se;
    double typical_continuity_scale = 0.0;  // magnitude of the largest balanced term
    double typical_momentum_scale = 0.0;
};

namespace detail {

struct FdGrids {
    GridMoments prev, mid, next;
};

inline int wrap(int c, int n) { return (c % n + n) % n; }

inline int cell_index(const MomentGrid& g, int cx, int cy, int cz) {
    return (wrap(cx, g.cells[0]) * g.cells[1] + wrap(cy, g.cells[1])) * g.cells[2] +
           wrap(cz, g.cells[2]);
}

/// Periodic central difference of a per-cell scalar field along axis d.
template <typename Get>
double spatial_div(const MomentGrid& g, int cx, int cy, int cz, const Get& get) {
    double div = 0.0;
    for (int d = 0; d < 3; ++d) {
        if (g.cells[static_cast<std::size_t>(d)] < 2) continue;  // uniform axis: no gradient resolvable
        int hi[3] = {cx, cy, cz}, lo[3] = {cx, cy, cz};
        hi[d] += 1;
        lo[d] -= 1;
        const double dx = g.box[static_cast<std::size_t>(d)] / g.cells[static_cast<std::size_t>(d)];
        div += (get(cell_index(g, hi[0], hi[1], hi[2]), d + 1) -
                get(cell_index(g, lo[0], lo[1], lo[2]), d + 1)) /
               (2.0 * dx);
    }
    return div;
}

} // namespace detail

inline MomentResiduals moment_residuals(const SliceTable& table,
                                        const std::vector<double>& lab_times,
                                        const MomentGrid& grid, std::size_t subsets = 8) {
    if (lab_times.size() < 3 || table.empty() || table.front().size() < 3)
        throw InsufficientSnapshots("moment_residuals: need at least 3 lab-time slices");
    const double dt2 = lab_times[2] - lab_times[0];
    const int ncell = grid.cell_count();

    // per-subset residuals
    std::vector<std::vector<double>> cont(static_cast<std::size_t>(ncell));
    std::vector<std::array<std::vector<double>, 4>> mom(static_cast<std::size_t>(ncell));
    double cont_scale = 0.0, mom_scale = 0.0;

    for (std::size_t sub = 0; sub < subsets; ++sub) {
        const double rescale = static_cast<double>(subsets);  // keep densities comparable
        const GridMoments g0 = deposit(table, 0, grid, subsets, sub);
        const GridMoments g1 = deposit(table, 1, grid, subsets, sub);
        const GridMoments g2 = deposit(table, 2, grid, subsets, sub);

        for (int cz = 0, ci = 0; cz < grid.cells[2]; ++cz)
            for (int cy = 0; cy < grid.cells[1]; ++cy)
                for (int cx = 0; cx < grid.cells[0]; ++cx, ++ci) {
                    // NOTE: cell index layout must match MomentGrid::cell_of
                    const int idx = detail::cell_index(grid, cx, cy, cz);
                    const auto getN = [&](int cell, int mu) {
                        return g1[static_cast<std::size_t>(cell)].N[mu] * rescale;
                    };
                    const double dndt =
                        (g2[static_cast<std::size_t>(idx)].N[0] - g0[static_cast<std::size_t>(idx)].N[0]) * rescale / dt2;
                    const double divN =
                        detail::spatial_div(grid, cx, cy, cz, getN);
                    cont[static_cast<std::size_t>(idx)].push_back(dndt + divN);
                    cont_scale = std::max(cont_scale,
                                          std::abs(g1[static_cast<std::size_t>(idx)].N[0] * rescale / dt2));

                    for (int nu = 0; nu < 4; ++nu) {
                        const auto getT = [&](int cell, int mu) {
                            return g1[static_cast<std::size_t>(cell)].T(mu, nu) * rescale;
                        };
                        const double dTdt = (g2[static_cast<std::size_t>(idx)].T(0, nu) -
                                             g0[static_cast<std::size_t>(idx)].T(0, nu)) *
                                            rescale / dt2;
                        const double divT = detail::spatial_div(grid, cx, cy, cz, getT);
                        const double src = g1[static_cast<std::size_t>(idx)].source[static_cast<std::size_t>(nu)] * rescale;
                        mom[static_cast<std::size_t>(idx)][static_cast<std::size_t>(nu)].push_back(dTdt + divT - src);
                        mom_scale = std::max(mom_scale, std::abs(src));
                        mom_scale = std::max(mom_scale, std::abs(dTdt));
                    }
                }
    }

    const auto mean_se = [](const std::vector<double>& xs, double& mean, double& se) {
        const double n = static_cast<double>(xs.size());
        mean = 0.0;
        for (double x : xs) mean += x;
        mean /= n;
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= (n - 1.0);
        se = std::sqrt(var / n);
    };

    MomentResiduals out;
    out.continuity.resize(static_cast<std::size_t>(ncell));
    out.continuity_se.resize(static_cast<std::size_t>(ncell));
    out.momentum.resize(static_cast<std::size_t>(ncell));
    out.momentum_se.resize(static_cast<std::size_t>(ncell));
    for (int ci = 0; ci < ncell; ++ci) {
        mean_se(cont[static_cast<std::size_t>(ci)], out.continuity[static_cast<std::size_t>(ci)], out.continuity_se[static_cast<std::size_t>(ci)]);
        for (int nu = 0; nu < 4; ++nu)
            mean_se(mom[static_cast<std::size_t>(ci)][static_cast<std::size_t>(nu)], out.momentum[static_cast<std::size_t>(ci)][static_cast<std::size_t>(nu)],
                    out.momentum_se[static_cast<std::size_t>(ci)][static_cast<std::size_t>(nu)]);
    }
    out.typical_continuity_scale = cont_scale;
    out.typical_momentum_scale = mom_scale;
    return out;
}

/// Deterministic uniform positions in the periodic box, one independent
/// stream per particle derived from the seed (splitmix64).
inline void scatter_positions_uniform(KineticEnsemble& ensemble, const MomentGrid& grid,
                                      std::uint64_t seed) {
    const auto splitmix = [](std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    for (std::size_t i = 0; i < ensemble.particles.size(); ++i) {
        std::uint64_t state = seed ^ (0xabcd0123ULL + i * 0x9e3779b97f4a7c15ULL);
        for (int d = 0; d < 3; ++d) {
            const double x01 = static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53;
            ensemble.particles[i].r[d + 1] = x01 * grid.box[static_cast<std::size_t>(d)];
        }
        ensemble.particles[i].r[0] = 0.0;
    }
}

} // namespace rr
