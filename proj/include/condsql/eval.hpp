#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "condsql/dataset.hpp"
#include "condsql/query.hpp"
#include "condsql/table.hpp"

namespace condsql {

struct ComponentScores {
    double s_col = 0.0;
    double s_agg = 0.0;
    double w_col = 0.0;
    double w_op = 0.0;
    double w_val = 0.0;
    double w_num = 0.0;

    friend bool operator==(const ComponentScores&, const ComponentScores&) = default;
};

struct ExampleResult {
    std::string id;
    bool lf = false;
    bool ex = false;
    bool s_col = false;
    bool s_agg = false;
    bool w_col = false;
    bool w_op = false;
    bool w_val = false;
    bool w_num = false;
    // Prediction failed rule validation or referenced a missing column.
    bool invalid = false;

    friend bool operator==(const ExampleResult&, const ExampleResult&) = default;
};

struct EvalReport {
    double acc_lf = 0.0;
    double acc_ex = 0.0;
    ComponentScores components;
    std::size_t n_examples = 0;
    std::vector<ExampleResult> per_example;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct Prediction {
    CanonicalQuery query;
    std::optional<std::string> id;
};

// Line-delimited records holding a "sql" object shaped like the gold field, optional "id".
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
std::vector<Prediction> read_predictions(std::istream& in);

// Position-aligned. Throws ValidationError on a length mismatch.
EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<Example>& gold,
                    const TableStore& store);
EvalReport evaluate(const std::vector<CanonicalQuery>& predictions, const std::vector<Example>& gold,
                    const TableStore& store);

enum class ReportFormat { Text, Structured };

std::string render_report(const EvalReport& report, ReportFormat format);
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

}  // namespace condsql
