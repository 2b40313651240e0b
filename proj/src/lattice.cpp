#include "policymix/lattice.hpp"

#include <nlohmann/json.hpp>

#include "policymix/error.hpp"

namespace policymix::lattice {

const char* to_string(TreatmentCell c) {
    switch (c) {
        case TreatmentCell::NoPolicy: return "no_policy";
        case TreatmentCell::PronafOnly: return "pronaf_only";
        case TreatmentCell::AterOnly: return "ater_only";
        case TreatmentCell::SeedsOnly: return "seeds_only";
        case TreatmentCell::PronafAter: return "pronaf_ater";
        case TreatmentCell::PronafSeeds: return "pronaf_seeds";
        case TreatmentCell::AterSeeds: return "ater_seeds";
        case TreatmentCell::AllThree: return "all_three";
    }
    return "?";
}

TreatmentCell cell_from_string(const std::string& s) {
    for (int i = 0; i < kNumCells; ++i) {
        const auto c = static_cast<TreatmentCell>(i);
        if (s == to_string(c)) return c;
    }
    throw ConfigError("unknown treatment cell '" + s + "'");
}

TreatmentCell classify_cell(int pronaf, int ater, int seeds) {
    if ((pronaf | ater | seeds) < 0 || pronaf > 1 || ater > 1 || seeds > 1)
        throw EstimationError("policy flags must be 0 or 1");
    if (pronaf && ater && seeds) return TreatmentCell::AllThree;
    if (pronaf && ater) return TreatmentCell::PronafAter;
    if (pronaf && seeds) return TreatmentCell::PronafSeeds;
    if (ater && seeds) return TreatmentCell::AterSeeds;
    if (pronaf) return TreatmentCell::PronafOnly;
    if (ater) return TreatmentCell::AterOnly;
    if (seeds) return TreatmentCell::SeedsOnly;
    return TreatmentCell::NoPolicy;
}

TreatmentCell classify_cell(const HouseholdRecord& r) {
    return classify_cell(r.pronaf, r.ater, r.seeds);
}

bool cell_has_pronaf(TreatmentCell c) {
    return c == TreatmentCell::PronafOnly || c == TreatmentCell::PronafAter ||
           c == TreatmentCell::PronafSeeds || c == TreatmentCell::AllThree;
}

bool cell_has_ater(TreatmentCell c) {
    return c == TreatmentCell::AterOnly || c == TreatmentCell::PronafAter ||
           c == TreatmentCell::AterSeeds || c == TreatmentCell::AllThree;
}

bool cell_has_seeds(TreatmentCell c) {
    return c == TreatmentCell::SeedsOnly || c == TreatmentCell::PronafSeeds ||
           c == TreatmentCell::AterSeeds || c == TreatmentCell::AllThree;
}

namespace {

CellSet cells_where(bool (*pred)(TreatmentCell)) {
    CellSet s{};
    for (int i = 0; i < kNumCells; ++i) s[i] = pred(static_cast<TreatmentCell>(i));
    return s;
}

CellSet complement(const CellSet& s) {
    CellSet c{};
    for (int i = 0; i < kNumCells; ++i) c[i] = !s[i];
    return c;
}

CellSet only(TreatmentCell c) {
    CellSet s{};
    s[static_cast<int>(c)] = true;
    return s;
}

std::vector<Contrast> make_standard_contrasts() {
    std::vector<Contrast> v;
    auto total = [&](int id, const std::string& name, bool (*pred)(TreatmentCell)) {
        const CellSet treated = cells_where(pred);
        v.push_back({id, name, treated, complement(treated), ModelKind::Binary});
    };
    auto vs_baseline = [&](int id, const std::string& name, TreatmentCell cell) {
        v.push_back({id, name, only(cell), only(TreatmentCell::NoPolicy), ModelKind::Multinomial});
    };
    total(1, "Pronaf (total)", cell_has_pronaf);
    total(2, "Technical assistance (total)", cell_has_ater);
    total(3, "Seeds (total)", cell_has_seeds);
    vs_baseline(4, "Pronaf only", TreatmentCell::PronafOnly);
    vs_baseline(5, "Technical assistance only", TreatmentCell::AterOnly);
    vs_baseline(6, "Seeds only", TreatmentCell::SeedsOnly);
    vs_baseline(7, "Pronaf & Technical assistance", TreatmentCell::PronafAter);
    vs_baseline(8, "Pronaf & Seeds", TreatmentCell::PronafSeeds);
    vs_baseline(9, "Technical assistance & Seeds", TreatmentCell::AterSeeds);
    vs_baseline(10, "All policies", TreatmentCell::AllThree);
    return v;
}

}  // namespace

const std::vector<Contrast>& standard_contrasts() {
    static const std::vector<Contrast> contrasts = make_standard_contrasts();
    return contrasts;
}

const Contrast& contrast_by_id(int id) {
    for (const auto& c : standard_contrasts())
        if (c.id == id) return c;
    throw ConfigError("no contrast with id " + std::to_string(id));
}

ContrastSample build_contrast_sample(const std::vector<TreatmentCell>& cells,
                                     const Contrast& contrast) {
    ContrastSample s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (contrast.is_treated(cells[i]))
            s.treated.push_back(i);
        else if (contrast.is_control(cells[i]))
            s.control.push_back(i);
        else
            ++s.excluded;
    }
    if (s.treated.empty())
        throw EstimationError("contrast " + std::to_string(contrast.id) + " (" + contrast.name +
                              "): no treated records");
    if (s.control.empty())
        throw EstimationError("contrast " + std::to_string(contrast.id) + " (" + contrast.name +
                              "): no control records");
    return s;
}

ContrastSample build_contrast_sample(const std::vector<HouseholdRecord>& records,
                                     const Contrast& contrast) {
    std::vector<TreatmentCell> cells;
    cells.reserve(records.size());
    for (const auto& r : records) cells.push_back(classify_cell(r));
    return build_contrast_sample(cells, contrast);
}

std::string contrasts_manifest_json() {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : standard_contrasts()) {
        nlohmann::json treated = nlohmann::json::array();
        nlohmann::json control = nlohmann::json::array();
        for (int i = 0; i < kNumCells; ++i) {
            const auto cell = static_cast<TreatmentCell>(i);
            if (c.is_treated(cell)) treated.push_back(to_string(cell));
            if (c.is_control(cell)) control.push_back(to_string(cell));
        }
        out.push_back({{"id", c.id},
                       {"name", c.name},
                       {"treated_cells", treated},
                       {"control_cells", control},
                       {"model", c.model_kind == ModelKind::Binary ? "binary" : "multinomial"}});
    }
    return out.dump(2);
}

}  // namespace policymix::lattice
