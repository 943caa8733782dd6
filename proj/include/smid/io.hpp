#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "smid/autoencoder.hpp"
#include "smid/gaussian_mixture.hpp"
#include "smid/harness.hpp"
#include "smid/metrics.hpp"
#include "smid/model.hpp"
#include "smid/observation.hpp"
#include "smid/pipeline.hpp"

namespace smid {

using Json = nlohmann::json;

void to_json(Json& j, const Matrix& m);
void from_json(const Json& j, Matrix& m);
void to_json(Json& j, const BinaryMatrix& m);
void from_json(const Json& j, BinaryMatrix& m);

void to_json(Json& j, const StimulationModel& model);
void from_json(const Json& j, StimulationModel& model);
void to_json(Json& j, const GaussianMixture& mix);
void from_json(const Json& j, GaussianMixture& mix);
void to_json(Json& j, const NetSpec& spec);
void from_json(const Json& j, NetSpec& spec);
void to_json(Json& j, const NeuralNet& net);
void from_json(const Json& j, NeuralNet& net);
void to_json(Json& j, const FitReport& fit);
void from_json(const Json& j, FitReport& fit);
void to_json(Json& j, const MetricsReport& metrics);
void from_json(const Json& j, MetricsReport& metrics);
void to_json(Json& j, const ObservationDataset& data);
void from_json(const Json& j, ObservationDataset& data);
void to_json(Json& j, const ExperimentConfig& config);
void from_json(const Json& j, ExperimentConfig& config);

/// Wall-clock timings are left out unless asked for, so that repeated runs
/// serialise to identical bytes.
struct ReportFormat {
  bool timings = false;
};

Json report_json(const IdentificationReport& report, ReportFormat format = {});
IdentificationReport report_from_json(const Json& j);
Json single_json(const SingleReport& single, ReportFormat format = {});
Json campaign_json(const McCampaign& campaign, ReportFormat format = {});

/// Two-space indented text with a trailing newline.
std::string dump(const Json& j);

/// Header line then one row per observation; values use the shortest
/// decimal that reads back to the same double. The event column is present
/// only for labelled data.
void write_dataset_csv(std::ostream& out, const ObservationDataset& data);
ObservationDataset read_dataset_csv(std::istream& in);

/// method,kind,count,runs rows for the M-hat and effective M-hat histograms.
void write_histogram_csv(std::ostream& out, const std::vector<MethodAggregate>& aggregates);
/// method,metric,threshold,fraction rows for the e_r and D_KL ECDFs.
void write_ecdf_csv(std::ostream& out, const std::vector<MethodAggregate>& aggregates);

/// Fixed-width comparison table, three significant digits; undefined
/// divergences print as "/".
std::string format_table(const SingleReport& single);
std::string format_campaign_table(const McCampaign& campaign);

/// Three significant digits, e.g. 0.0123, 1.23e-05.
std::string sig3(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace smid
