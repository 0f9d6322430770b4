#include "preimage/quantverify.hpp"

#include <unordered_map>

#include "preimage/errors.hpp"

namespace preimage {

void QuantitativeProperty::validate(std::size_t net_output_dim) const {
    input_set.validate();
    output_spec.validate(net_output_dim);
    if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("quantitative property: p must lie in [0, 1]");
}

Verdict verify(const Network& net, const QuantitativeProperty& prop,
               const RefinementConfig& base_cfg) {
    net.validate();
    prop.validate(net.output_dim());

    const double vol_i = exact_volume(prop.input_set);
    if (vol_i <= 0.0)
        throw ValidationError("quantitative property: input set has zero volume");
    const double threshold = prop.p * vol_i;

    // Refine over the tight box around I; I's halfspaces ride along inside
    // every membership test, polytope, and exact volume.
    Hyperrectangle domain =
        prop.input_set.halfspaces.empty() ? prop.input_set.box : outer_box(prop.input_set);

    RefinementConfig cfg = base_cfg;
    cfg.approx.input_rows.insert(cfg.approx.input_rows.end(), prop.input_set.halfspaces.begin(),
                                 prop.input_set.halfspaces.end());
    cfg.target_volume = threshold;

    RefinementState state(net, prop.output_spec, domain, cfg);

    Verdict v;
    std::unordered_map<std::uint64_t, double> vol_cache;  // leaf seq -> exact volume
    double best_exact = 0.0;

    for (;;) {
        // Certify at most once per iteration, and only when the cheap
        // estimate says the target might already be covered.
        if (state.est_dup_volume() >= threshold) {
            double exact_total = 0.0;
            for (const SubregionNode& leaf : state.leaves()) {
                auto it = vol_cache.find(leaf.seq);
                if (it == vol_cache.end()) {
                    double vol = exact_volume(leaf.approx.polytope);
                    ++v.exact_volume_calls;
                    it = vol_cache.emplace(leaf.seq, vol).first;
                }
                exact_total += it->second;
            }
            best_exact = std::max(best_exact, exact_total);
            if (exact_total >= threshold) {
                v.certified = true;
                v.certified_fraction = exact_total / vol_i;
                v.iterations = state.iterations();
                return v;
            }
        }
        if (state.budget_exhausted()) break;
        state.refine_step();
    }

    v.certified = false;
    v.certified_fraction = best_exact / vol_i;
    v.iterations = state.iterations();
    return v;
}

}  // namespace preimage
