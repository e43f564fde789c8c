#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cascade/allocation.hpp"
#include "cascade/design.hpp"
#include "cascade/inflow.hpp"
#include "cascade/metrics.hpp"
#include "cascade/structure.hpp"

namespace cascade::io {

// Strict parse: unknown fields, non-integer amounts and malformed weights are
// rejected with the offending JSON path. The result is validated.
StructureSpec parse_structure(const std::string& text);
std::string serialize_structure(const StructureSpec& spec);

PoolSpec parse_pool(const std::string& text);
std::string serialize_pool(const PoolSpec& pool);

DesignSpace parse_design_space(const std::string& text, StructureSpec base);
Objective parse_objective(const std::string& text);

struct InflowPath {
    std::vector<Money> inflows;
    std::vector<Money> pool_losses;  // empty when the CSV has no pool_loss column
};

// Header `period,amount` with optional `pool_loss` column; periods must be 0..n-1 in order.
InflowPath parse_inflows_csv(const std::string& text);

DiscountCurve parse_curve_csv(const std::string& text);

// `scenario,period,position,due,paid,residual_after[,weight]`
std::string payments_csv(const StructureSpec& spec, std::span<const PaymentMatrix> matrices,
                         const Weights& weights = std::nullopt);

// `scenario,period,inflow[,weight]`
std::string scenarios_csv(std::span<const InflowScenario> scenarios);

struct PaymentsTable {
    std::vector<std::string> positions;  // first-seen order
    std::vector<PaymentMatrix> matrices;
    Weights weights;
};

PaymentsTable parse_payments_csv(const std::string& text);

std::string report_json(const MetricReport& report, std::int64_t minor_per_major);
std::string report_csv(const MetricReport& report, std::int64_t minor_per_major);

std::string sweep_table_csv(const DesignSpace& space, const SearchResult& result);

std::string read_file(const std::filesystem::path& path);

// Writes via a temporary file in the same directory and renames into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& data);

struct RunManifest {
    std::string tool_version;
    std::string command;
    std::vector<std::pair<std::string, std::string>> input_digests;  // path, sha256
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> scenario_count;
    std::string timestamp;

    std::string to_json() const;
};

}  // namespace cascade::io
