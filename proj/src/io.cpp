#include "stochsim/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace stochsim::io {

using nlohmann::json;

namespace {

json tensor_to_json(const hmm::TransitionTensor &T) {
    json tensor = json::array();
    for (int x = 0; x < T.d; ++x) {
        json mat = json::array();
        for (int a = 0; a < T.D; ++a) {
            json row = json::array();
            for (int b = 0; b < T.D; ++b) row.push_back(T[x](a, b));
            mat.push_back(std::move(row));
        }
        tensor.push_back(std::move(mat));
    }
    return tensor;
}

json tensor_to_json(const qsim::QuantumTensor &K) {
    json tensor = json::array();
    for (int x = 0; x < K.d; ++x) {
        json mat = json::array();
        for (int a = 0; a < K.D; ++a) {
            json row = json::array();
            for (int b = 0; b < K.D; ++b)
                row.push_back(json::array({K[x](a, b).real(), K[x](a, b).imag()}));
            mat.push_back(std::move(row));
        }
        tensor.push_back(std::move(mat));
    }
    return tensor;
}

void require(bool cond, const std::string &msg) {
    if (!cond) throw IoError("model file: " + msg);
}

} // namespace

json model_to_json(const ModelFile &file) {
    json j;
    j["kind"] = file.is_classical() ? "classical" : "quantum";
    j["d"] = file.alphabet();
    j["D"] = file.memory();
    if (file.is_classical()) {
        j["tensor"] = tensor_to_json(file.classical());
    } else {
        j["tensor"] = tensor_to_json(file.quantum());
        j["normalized"] = file.quantum().normalized;
    }
    j["metadata"] = file.metadata;
    return j;
}

ModelFile model_from_json(const json &j) {
    require(j.contains("kind") && j.contains("d") && j.contains("D") && j.contains("tensor"),
            "missing required field");
    const std::string kind = j.at("kind").get<std::string>();
    const int d = j.at("d").get<int>();
    const int D = j.at("D").get<int>();
    const json &tensor = j.at("tensor");
    require(tensor.is_array() && static_cast<int>(tensor.size()) == d, "tensor has wrong arity");

    ModelFile file;
    if (j.contains("metadata")) file.metadata = j.at("metadata");
    if (kind == "classical") {
        hmm::TransitionTensor T = hmm::TransitionTensor::zeros(d, D);
        for (int x = 0; x < d; ++x) {
            const json &mat = tensor.at(static_cast<std::size_t>(x));
            require(static_cast<int>(mat.size()) == D, "matrix has wrong row count");
            for (int a = 0; a < D; ++a) {
                const json &row = mat.at(static_cast<std::size_t>(a));
                require(static_cast<int>(row.size()) == D, "matrix has wrong column count");
                for (int b = 0; b < D; ++b)
                    T[x](a, b) = row.at(static_cast<std::size_t>(b)).get<double>();
            }
        }
        T.validate(1e-9);
        file.model = std::move(T);
    } else if (kind == "quantum") {
        qsim::QuantumTensor K = qsim::QuantumTensor::zeros(d, D);
        for (int x = 0; x < d; ++x) {
            const json &mat = tensor.at(static_cast<std::size_t>(x));
            require(static_cast<int>(mat.size()) == D, "matrix has wrong row count");
            for (int a = 0; a < D; ++a) {
                const json &row = mat.at(static_cast<std::size_t>(a));
                require(static_cast<int>(row.size()) == D, "matrix has wrong column count");
                for (int b = 0; b < D; ++b) {
                    const json &entry = row.at(static_cast<std::size_t>(b));
                    require(entry.is_array() && entry.size() == 2,
                            "complex entries must be [re, im] pairs");
                    K[x](a, b) = Complex(entry.at(0).get<double>(), entry.at(1).get<double>());
                }
            }
        }
        K.normalized = j.value("normalized", false);
        K.validate(1e-9);
        file.model = std::move(K);
    } else {
        throw IoError("model file: unknown kind '" + kind + "'");
    }
    return file;
}

ModelFile load_model(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        throw IoError("cannot parse model file " + path + ": " + e.what());
    }
    return model_from_json(j);
}

void save_model(const std::string &path, const ModelFile &file) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path);
    out << model_to_json(file).dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

//=========================================================================
// Sequence files
//=========================================================================

std::vector<SymbolSequence> load_sequences(const std::string &path, int d) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sequence file: " + path);
    std::vector<SymbolSequence> out;
    std::string line;
    int max_symbol = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        SymbolSequence seq;
        std::istringstream ss(line);
        int s;
        while (ss >> s) {
            if (s < 0) throw IoError("sequence file: negative symbol");
            max_symbol = std::max(max_symbol, s);
            seq.symbols.push_back(s);
        }
        out.push_back(std::move(seq));
    }
    const int alphabet = d > 0 ? d : std::max(max_symbol + 1, 2);
    for (auto &seq : out) {
        seq.d = alphabet;
        for (int s : seq.symbols)
            if (s >= alphabet) throw IoError("sequence file: symbol exceeds alphabet");
    }
    return out;
}

void save_sequences(const std::string &path, const std::vector<SymbolSequence> &seqs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write sequence file: " + path);
    for (const auto &seq : seqs) {
        for (std::size_t i = 0; i < seq.symbols.size(); ++i) {
            if (i) out << ' ';
            out << seq.symbols[i];
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

//=========================================================================
// Results CSV
//=========================================================================

ResultsCsv::ResultsCsv(std::string path) : path_(std::move(path)) {
    std::ifstream probe(path_);
    const bool fresh = !probe || probe.peek() == std::ifstream::traits_type::eof();
    probe.close();
    if (fresh) {
        std::ofstream out(path_);
        if (!out) throw IoError("cannot write results file: " + path_);
        out << "experiment,param_json,metric,value,seed\n";
    }
}

void ResultsCsv::row(const std::string &experiment, const json &params,
                     const std::string &metric, double value, std::uint64_t seed) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to results file: " + path_);
    std::string pj = params.dump();
    std::string quoted = "\"";
    for (char c : pj) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += "\"";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out << experiment << ',' << quoted << ',' << metric << ',' << buf << ',' << seed << "\n";
}

//=========================================================================
// Categorical CSV ingestion
//=========================================================================

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

IngestResult ingest_csv_column(const std::string &csv_path, const std::string &column) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open csv file: " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("csv file is empty: " + csv_path);
    const auto header = split_csv_line(line);
    const auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end())
        throw UsageError("csv file has no column named '" + column + "'");
    const std::size_t idx = static_cast<std::size_t>(it - header.begin());

    IngestResult res;
    res.sequence.d = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (idx >= fields.size())
            throw IoError("csv row has too few fields");
        const std::string &value = fields[idx];
        auto pos = std::find(res.labels.begin(), res.labels.end(), value);
        if (pos == res.labels.end()) {
            res.labels.push_back(value);
            pos = res.labels.end() - 1;
        }
        res.sequence.symbols.push_back(static_cast<int>(pos - res.labels.begin()));
    }
    if (res.sequence.symbols.empty())
        throw UsageError("csv column '" + column + "' has no data rows");
    res.sequence.d = static_cast<int>(res.labels.size());
    return res;
}

void save_label_map(const std::string &path, const IngestResult &ingest) {
    json j = json::object();
    for (std::size_t i = 0; i < ingest.labels.size(); ++i)
        j[ingest.labels[i]] = static_cast<int>(i);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write label map: " + path);
    out << j.dump(2) << "\n";
}

} // namespace stochsim::io
