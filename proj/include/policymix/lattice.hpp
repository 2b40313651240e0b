#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "policymix/record.hpp"

namespace policymix::lattice {

// The 2^3 policy-intersection lattice: baseline plus seven treated cells.
enum class TreatmentCell : std::uint8_t {
    NoPolicy = 0,
    PronafOnly,
    AterOnly,
    SeedsOnly,
    PronafAter,
    PronafSeeds,
    AterSeeds,
    AllThree,
};
inline constexpr int kNumCells = 8;

const char* to_string(TreatmentCell c);
TreatmentCell cell_from_string(const std::string& s);

TreatmentCell classify_cell(int pronaf, int ater, int seeds);
TreatmentCell classify_cell(const HouseholdRecord& r);

bool cell_has_pronaf(TreatmentCell c);
bool cell_has_ater(TreatmentCell c);
bool cell_has_seeds(TreatmentCell c);

using CellSet = std::array<bool, kNumCells>;

enum class ModelKind { Binary, Multinomial };

// One treated-vs-control comparison. Totals (1-3) use the complement as
// control; exclusive treatments and mixes (4-10) use the no-policy cell.
struct Contrast {
    int id = 0;
    std::string name;
    CellSet treated_predicate{};
    CellSet control_predicate{};
    ModelKind model_kind = ModelKind::Binary;

    bool is_treated(TreatmentCell c) const { return treated_predicate[static_cast<int>(c)]; }
    bool is_control(TreatmentCell c) const { return control_predicate[static_cast<int>(c)]; }
};

// The ten standard comparisons, in id order.
const std::vector<Contrast>& standard_contrasts();
const Contrast& contrast_by_id(int id);

struct ContrastSample {
    std::vector<std::size_t> treated;   // indices into the input records
    std::vector<std::size_t> control;
    std::size_t excluded = 0;           // in neither predicate
};

ContrastSample build_contrast_sample(const std::vector<HouseholdRecord>& records,
                                     const Contrast& contrast);
ContrastSample build_contrast_sample(const std::vector<TreatmentCell>& cells,
                                     const Contrast& contrast);

// Machine-readable manifest of contrast definitions (JSON text).
std::string contrasts_manifest_json();

}  // namespace policymix::lattice
