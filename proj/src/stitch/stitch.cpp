#include "volsr/stitch/stitch.hpp"

#include "volsr/interp/resample.hpp"
#include "volsr/models/batch.hpp"
#include "volsr/util/errors.hpp"

#include <cmath>
#include <numbers>

namespace volsr::stitch {

using patch::kPatchOut;

namespace {

std::vector<double> taper_profile() {
    std::vector<double> w(kPatchOut);
    for (std::size_t i = 0; i < kPatchOut; ++i)
        w[i] = std::sin(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(kPatchOut));
    return w;
}

} // namespace

StitchAccumulator::StitchAccumulator(Dims dims, PatchSpec spec, Blend blend)
    : dims_(dims), spec_(std::move(spec)), blend_(blend) {
    if (dims.x < kPatchOut || dims.y < kPatchOut || dims.z < kPatchOut)
        throw ContractError("stitch: grid " + io::to_string(dims) + " smaller than one 16^3 patch");
}

void StitchAccumulator::place_patch(const Grid3& prediction, Origin o) {
    const Dims p = prediction.dims();
    if (p.x != kPatchOut || p.y != kPatchOut || p.z != kPatchOut)
        throw ContractError("stitch: prediction is " + io::to_string(p) + ", expected 16x16x16");
    const std::size_t c = spec_.crop_offset();
    if (o.x + c + kPatchOut > dims_.x || o.y + c + kPatchOut > dims_.y || o.z + c + kPatchOut > dims_.z)
        throw ContractError("stitch: patch at window origin (" + std::to_string(o.x) + "," + std::to_string(o.y) +
                            "," + std::to_string(o.z) + ") falls outside " + io::to_string(dims_));
    if (!prediction.all_finite()) throw NumericError("stitch: prediction contains non-finite values");
    patches_[o].push_back(prediction);
    ++placed_;
}

void StitchAccumulator::totals(Grid3& sum, Grid3& weight, Grid3& count) const {
    sum = Grid3(dims_, 0.0);
    weight = Grid3(dims_, 0.0);
    count = Grid3(dims_, 0.0);
    const std::vector<double> taper = taper_profile();
    const std::size_t c = spec_.crop_offset();
    for (const auto& [o, list] : patches_)
        for (const Grid3& p : list)
            for (std::size_t k = 0; k < kPatchOut; ++k)
                for (std::size_t j = 0; j < kPatchOut; ++j)
                    for (std::size_t i = 0; i < kPatchOut; ++i) {
                        const std::size_t x = o.x + c + i, y = o.y + c + j, z = o.z + c + k;
                        const double w = blend_ == Blend::uniform ? 1.0 : taper[i] * taper[j] * taper[k];
                        sum(x, y, z) += w * p(i, j, k);
                        weight(x, y, z) += w;
                        count(x, y, z) += 1.0;
                    }
}

Grid3 StitchAccumulator::sum() const {
    Grid3 s(dims_), w(dims_), n(dims_);
    totals(s, w, n);
    return s;
}

Grid3 StitchAccumulator::count() const {
    Grid3 s(dims_), w(dims_), n(dims_);
    totals(s, w, n);
    return n;
}

StitchResult finalize(const StitchAccumulator& acc, const Grid3* fill, Fill policy) {
    if (acc.placed() == 0) throw ContractError("stitch: finalize on an empty accumulator");
    Grid3 sum(acc.dims()), weight(acc.dims()), count(acc.dims());
    acc.totals(sum, weight, count);
    if (policy == Fill::coarse) {
        if (!fill) throw ContractError("stitch: coarse fill policy needs a fill field");
        if (fill->dims() != acc.dims())
            throw ContractError("stitch: fill field " + io::to_string(fill->dims()) + " does not match grid " +
                                io::to_string(acc.dims()));
    }
    StitchResult r{Grid3(acc.dims(), 0.0), Grid3(acc.dims(), 0.0), 0};
    for (std::size_t i = 0; i < sum.values().size(); ++i) {
        if (count[i] > 0.0) {
            r.values[i] = sum[i] / weight[i];
            r.mask[i] = 1.0;
            ++r.covered;
        } else if (policy == Fill::coarse) {
            r.values[i] = (*fill)[i];
        }
    }
    return r;
}

PatchPredictor identity_predictor() {
    return [](std::span<const Grid3> batch) { return std::vector<Grid3>(batch.begin(), batch.end()); };
}

PatchPredictor vae_predictor(models::VaeModel<float>& model) {
    return [&model](std::span<const Grid3> batch) {
        std::vector<const Grid3*> ptrs;
        for (const auto& g : batch) ptrs.push_back(&g);
        const auto out = model.superresolve(models::stack_cubes<float>(ptrs));
        std::vector<Grid3> res;
        for (std::size_t n = 0; n < batch.size(); ++n) res.push_back(models::unstack_cube(out, n));
        return res;
    };
}

Dims fine_dims_for(Dims coarse, std::size_t A) {
    if (A == 0) throw ContractError("fine_dims_for: A must be >= 1");
    return {(coarse.x - 1) * A + 1, (coarse.y - 1) * A + 1, (coarse.z - 1) * A + 1};
}

StitchResult reconstruct_full(const Grid3& coarse, Dims fine, const PatchSpec& spec, const patch::NormStats& stats,
                              const PatchPredictor& predict, const ReconstructOptions& options) {
    const std::size_t A = spec.A(), q = spec.q(), m = q / A;
    if (spec.s() % A != 0)
        throw ConfigError("reconstruct: stride s = " + std::to_string(spec.s()) + " must be a multiple of A = " +
                          std::to_string(A));
    if (options.batch_size == 0) throw ConfigError("reconstruct: batch_size must be >= 1");
    const auto origins = patch::tile_origins(fine, q, spec.s());
    const Grid3 norm = patch::apply_norm(coarse, stats);
    const Dims cd = coarse.dims();
    for (const auto& o : origins)
        if (o.x / A + m > cd.x || o.y / A + m > cd.y || o.z / A + m > cd.z)
            throw ContractError("reconstruct: coarse grid " + io::to_string(cd) + " too small for fine grid " +
                                io::to_string(fine) + " at A = " + std::to_string(A));

    StitchAccumulator acc(fine, spec, options.blend);
    for (std::size_t b = 0; b < origins.size(); b += options.batch_size) {
        const std::size_t e = std::min(origins.size(), b + options.batch_size);
        std::vector<Grid3> inputs;
        for (std::size_t i = b; i < e; ++i) {
            const Origin& o = origins[i];
            const Grid3 cube = patch::extract_cube(norm, {o.x / A, o.y / A, o.z / A}, m);
            inputs.push_back(patch::upsample_lr(cube, kPatchOut, spec.upsample()));
        }
        const auto preds = predict(inputs);
        if (preds.size() != inputs.size())
            throw ContractError("reconstruct: predictor returned " + std::to_string(preds.size()) + " patches for " +
                                std::to_string(inputs.size()) + " inputs");
        for (std::size_t i = b; i < e; ++i) acc.place_patch(preds[i - b], origins[i]);
    }

    const Grid3 fill = interp::resample_to(norm, fine, interp::Kernel::trilinear);
    StitchResult r = finalize(acc, &fill, options.fill);
    r.values = patch::invert_norm(r.values, stats);
    return r;
}

} // namespace volsr::stitch
