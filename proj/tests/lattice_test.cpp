#include <doctest.h>

#include <nlohmann/json.hpp>
#include <set>

#include "policymix/error.hpp"
#include "policymix/lattice.hpp"
#include "test_support.hpp"

using namespace policymix;
using namespace policymix::lattice;
using testsup::base_record;

TEST_CASE("cells classify from the three participation flags") {
    CHECK(classify_cell(0, 0, 0) == TreatmentCell::NoPolicy);
    CHECK(classify_cell(1, 0, 0) == TreatmentCell::PronafOnly);
    CHECK(classify_cell(0, 1, 0) == TreatmentCell::AterOnly);
    CHECK(classify_cell(0, 0, 1) == TreatmentCell::SeedsOnly);
    CHECK(classify_cell(1, 1, 0) == TreatmentCell::PronafAter);
    CHECK(classify_cell(1, 0, 1) == TreatmentCell::PronafSeeds);
    CHECK(classify_cell(0, 1, 1) == TreatmentCell::AterSeeds);
    CHECK(classify_cell(1, 1, 1) == TreatmentCell::AllThree);

    auto r = base_record();
    r.pronaf = 1;
    r.seeds = 1;
    CHECK(classify_cell(r) == TreatmentCell::PronafSeeds);
}

TEST_CASE("cell names round trip") {
    for (int c = 0; c < kNumCells; ++c) {
        const auto cell = static_cast<TreatmentCell>(c);
        CHECK(cell_from_string(to_string(cell)) == cell);
    }
    CHECK_THROWS_AS(cell_from_string("nonsense"), ConfigError);
}

TEST_CASE("cell flags recover the component policies") {
    CHECK(cell_has_pronaf(TreatmentCell::PronafSeeds));
    CHECK(!cell_has_pronaf(TreatmentCell::AterSeeds));
    CHECK(cell_has_ater(TreatmentCell::AllThree));
    CHECK(!cell_has_ater(TreatmentCell::SeedsOnly));
    CHECK(cell_has_seeds(TreatmentCell::SeedsOnly));
    CHECK(!cell_has_seeds(TreatmentCell::NoPolicy));
}

TEST_CASE("ten standard contrasts with fixed ids and names") {
    const auto& contrasts = standard_contrasts();
    REQUIRE(contrasts.size() == 10);
    for (int id = 1; id <= 10; ++id) {
        CHECK(contrasts[std::size_t(id - 1)].id == id);
        CHECK(contrast_by_id(id).id == id);
    }
    CHECK(contrast_by_id(1).name == "Pronaf (total)");
    CHECK(contrast_by_id(2).name == "Technical assistance (total)");
    CHECK(contrast_by_id(3).name == "Seeds (total)");
    CHECK(contrast_by_id(4).name == "Pronaf only");
    CHECK(contrast_by_id(5).name == "Technical assistance only");
    CHECK(contrast_by_id(6).name == "Seeds only");
    CHECK(contrast_by_id(7).name == "Pronaf & Technical assistance");
    CHECK(contrast_by_id(8).name == "Pronaf & Seeds");
    CHECK(contrast_by_id(9).name == "Technical assistance & Seeds");
    CHECK(contrast_by_id(10).name == "All policies");
    CHECK_THROWS_AS(contrast_by_id(0), ConfigError);
    CHECK_THROWS_AS(contrast_by_id(11), ConfigError);
}

TEST_CASE("total contrasts compare a policy with its complement") {
    const auto& pronaf_total = contrast_by_id(1);
    CHECK(pronaf_total.model_kind == ModelKind::Binary);
    int treated = 0, control = 0;
    for (int c = 0; c < kNumCells; ++c) {
        const auto cell = static_cast<TreatmentCell>(c);
        CHECK(pronaf_total.is_treated(cell) == cell_has_pronaf(cell));
        CHECK(pronaf_total.is_control(cell) == !cell_has_pronaf(cell));
        treated += pronaf_total.is_treated(cell);
        control += pronaf_total.is_control(cell);
    }
    CHECK(treated == 4);
    CHECK(control == 4);
}

TEST_CASE("exclusive contrasts compare one cell with the no-policy cell") {
    for (int id = 4; id <= 10; ++id) {
        const auto& contrast = contrast_by_id(id);
        CHECK(contrast.model_kind == ModelKind::Multinomial);
        int treated = 0;
        for (int c = 0; c < kNumCells; ++c) {
            const auto cell = static_cast<TreatmentCell>(c);
            treated += contrast.is_treated(cell);
            CHECK(contrast.is_control(cell) == (cell == TreatmentCell::NoPolicy));
        }
        CHECK(treated == 1);
        CHECK(!contrast.is_treated(TreatmentCell::NoPolicy));
    }
}

TEST_CASE("every policy cell is treated in exactly one exclusive contrast") {
    for (int c = 1; c < kNumCells; ++c) {
        const auto cell = static_cast<TreatmentCell>(c);
        int count = 0;
        for (int id = 4; id <= 10; ++id) count += contrast_by_id(id).is_treated(cell);
        CHECK(count == 1);
    }
}

TEST_CASE("contrast samples count treated and controls from records") {
    std::vector<HouseholdRecord> records;
    auto add = [&](int pronaf, int ater, int seeds) {
        auto r = base_record("r" + std::to_string(records.size()));
        r.pronaf = pronaf;
        r.ater = ater;
        r.seeds = seeds;
        records.push_back(r);
    };
    add(0, 0, 0);
    add(0, 0, 0);
    add(1, 0, 0);
    add(1, 1, 0);
    add(0, 1, 0);

    const auto pronaf_total = build_contrast_sample(records, contrast_by_id(1));
    CHECK(pronaf_total.treated.size() == 2);
    CHECK(pronaf_total.control.size() == 3);

    const auto pronaf_only = build_contrast_sample(records, contrast_by_id(4));
    CHECK(pronaf_only.treated.size() == 1);
    CHECK(pronaf_only.control.size() == 2);  // exclusive contrasts ignore other-policy cells
}

TEST_CASE("contrast manifest lists all ten with cell memberships") {
    const auto manifest = nlohmann::json::parse(contrasts_manifest_json());
    REQUIRE(manifest.is_array());
    REQUIRE(manifest.size() == 10);
    std::set<int> ids;
    for (const auto& entry : manifest) {
        ids.insert(entry.at("id").get<int>());
        CHECK(!entry.at("name").get<std::string>().empty());
        CHECK(!entry.at("treated_cells").empty());
        CHECK(!entry.at("control_cells").empty());
    }
    CHECK(ids.size() == 10);
}
