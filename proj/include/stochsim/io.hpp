#ifndef STOCHSIM_IO_HPP
#define STOCHSIM_IO_HPP

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stochsim/classical.hpp"
#include "stochsim/quantum.hpp"

namespace stochsim::io {

//=========================================================================
// Model files (JSON; complex entries as [re, im] pairs)
//=========================================================================

struct ModelFile {
    std::variant<hmm::TransitionTensor, qsim::QuantumTensor> model;
    nlohmann::json metadata = nlohmann::json::object();

    bool is_classical() const { return std::holds_alternative<hmm::TransitionTensor>(model); }
    const hmm::TransitionTensor &classical() const { return std::get<hmm::TransitionTensor>(model); }
    const qsim::QuantumTensor &quantum() const { return std::get<qsim::QuantumTensor>(model); }
    int alphabet() const { return is_classical() ? classical().d : quantum().d; }
    int memory() const { return is_classical() ? classical().D : quantum().D; }
};

nlohmann::json model_to_json(const ModelFile &file);
ModelFile model_from_json(const nlohmann::json &j);

ModelFile load_model(const std::string &path);
void save_model(const std::string &path, const ModelFile &file);

//=========================================================================
// Sequence files (one whitespace-separated sequence per line)
//=========================================================================

// `d` counts symbols; negative infers max+1 (at least 2) from the data.
std::vector<SymbolSequence> load_sequences(const std::string &path, int d = -1);
void save_sequences(const std::string &path, const std::vector<SymbolSequence> &seqs);

//=========================================================================
// Results CSV
//=========================================================================

// Appends rows under the fixed header experiment,param_json,metric,value,seed.
class ResultsCsv {
  public:
    explicit ResultsCsv(std::string path);
    void row(const std::string &experiment, const nlohmann::json &params,
             const std::string &metric, double value, std::uint64_t seed);

  private:
    std::string path_;
};

//=========================================================================
// Categorical CSV ingestion
//=========================================================================

struct IngestResult {
    SymbolSequence sequence;
    std::vector<std::string> labels; // labels[i] is the value mapped to symbol i
};

// Maps the distinct values of one column to symbols 0..d-1 in order of first
// appearance.
IngestResult ingest_csv_column(const std::string &csv_path, const std::string &column);

void save_label_map(const std::string &path, const IngestResult &ingest);

} // namespace stochsim::io

#endif
