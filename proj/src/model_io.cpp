#include "fairpred/model_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fairpred/errors.hpp"
#include "fairpred/hashing.hpp"

namespace fairpred {

namespace {

// Percent-encoding for names that may contain whitespace; "~" marks the
// empty string so every field stays a single token.
std::string encode_field(const std::string& text) {
    if (text.empty()) return "~";
    std::string out;
    for (char c : text) {
        if (c == '%' || c == '~' || std::isspace(static_cast<unsigned char>(c))) {
            char buf[4];
            std::snprintf(buf, sizeof(buf), "%%%02X", static_cast<unsigned char>(c));
            out += buf;
        } else {
            out += c;
        }
    }
    return out;
}

std::string decode_field(const std::string& text) {
    if (text == "~") return "";
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '%' && i + 2 < text.size()) {
            out += static_cast<char>(std::stoi(text.substr(i + 1, 2), nullptr, 16));
            i += 2;
        } else {
            out += text[i];
        }
    }
    return out;
}

std::string format_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v); // hexfloat round-trips exactly
    return buf;
}

double parse_exact(const std::string& text) {
    return std::strtod(text.c_str(), nullptr);
}

const char* feature_kind_name(FeatureKind kind) {
    switch (kind) {
    case FeatureKind::ActivityCount: return "count";
    case FeatureKind::NumericValue: return "numeric";
    case FeatureKind::NumericUnassigned: return "numeric-unassigned";
    case FeatureKind::OneHot: return "onehot";
    case FeatureKind::OneHotUnknown: return "onehot-unknown";
    default: return "onehot-unassigned";
    }
}

FeatureKind parse_feature_kind(const std::string& name) {
    if (name == "count") return FeatureKind::ActivityCount;
    if (name == "numeric") return FeatureKind::NumericValue;
    if (name == "numeric-unassigned") return FeatureKind::NumericUnassigned;
    if (name == "onehot") return FeatureKind::OneHot;
    if (name == "onehot-unknown") return FeatureKind::OneHotUnknown;
    if (name == "onehot-unassigned") return FeatureKind::OneHotUnassigned;
    throw DataError("model file: unknown feature kind '" + name + "'");
}

void write_network(std::ostream& out, const std::string& name, const Network& net) {
    out << "network " << name << ' ' << net.layers.size() << '\n';
    for (const DenseLayer& layer : net.layers) {
        out << "layer " << layer.in_dim << ' ' << layer.out_dim << ' '
            << activation_name(layer.activation) << '\n';
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            out << "w";
            for (std::size_t c = 0; c < layer.in_dim; ++c) {
                out << ' ' << format_exact(layer.weights[r * layer.in_dim + c]);
            }
            out << '\n';
        }
        out << "b";
        for (double b : layer.biases) out << ' ' << format_exact(b);
        out << '\n';
    }
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::vector<std::string> next(const std::string& expected_head) {
        std::string line;
        if (!std::getline(in_, line)) {
            throw DataError("model file: unexpected end of file (expected '" + expected_head + "')");
        }
        ++line_no_;
        std::vector<std::string> tokens;
        std::istringstream split(line);
        std::string token;
        while (split >> token) tokens.push_back(token);
        if (tokens.empty() || tokens[0] != expected_head) {
            throw DataError("model file line " + std::to_string(line_no_) + ": expected '" +
                            expected_head + "'");
        }
        return tokens;
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

Network read_network(LineReader& reader, const std::string& name) {
    auto header = reader.next("network");
    if (header.size() != 3 || header[1] != name) {
        throw DataError("model file: expected network '" + name + "'");
    }
    std::size_t n_layers = std::stoul(header[2]);
    Network net;
    for (std::size_t li = 0; li < n_layers; ++li) {
        auto layer_line = reader.next("layer");
        if (layer_line.size() != 4) throw DataError("model file: malformed layer line");
        DenseLayer layer;
        layer.in_dim = std::stoul(layer_line[1]);
        layer.out_dim = std::stoul(layer_line[2]);
        layer.activation = parse_activation(layer_line[3]);
        layer.weights.reserve(layer.in_dim * layer.out_dim);
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            auto row = reader.next("w");
            if (row.size() != layer.in_dim + 1) {
                throw DataError("model file: weight row has wrong length");
            }
            for (std::size_t c = 0; c < layer.in_dim; ++c) {
                layer.weights.push_back(parse_exact(row[c + 1]));
            }
        }
        auto biases = reader.next("b");
        if (biases.size() != layer.out_dim + 1) {
            throw DataError("model file: bias row has wrong length");
        }
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            layer.biases.push_back(parse_exact(biases[r + 1]));
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

} // namespace

std::string serialize_schema(const FeatureSchema& schema) {
    std::ostringstream out;
    out << "features " << schema.features.size() << '\n';
    for (const FeatureDescriptor& f : schema.features) {
        out << "feature " << feature_kind_name(f.kind) << ' ' << encode_field(f.name) << ' '
            << encode_field(f.category) << ' ' << format_exact(f.min) << ' ' << format_exact(f.max)
            << '\n';
    }
    out << "protected-indices";
    for (std::size_t index : schema.protected_indices) out << ' ' << index;
    out << '\n';
    out << "protected-names";
    for (const std::string& name : schema.protected_names) out << ' ' << encode_field(name);
    out << '\n';
    return out.str();
}

std::string schema_hash(const FeatureSchema& schema) {
    return to_hex(fnv1a64(serialize_schema(schema)));
}

void save_model(const AdversarialModel& model, const std::string& path,
                const std::string& manifest_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write model file: " + path);
    }
    std::string schema_text = serialize_schema(model.schema);
    out << "fairpred-model v1\n";
    out << "manifest " << manifest_hash << '\n';
    out << "schema-hash " << to_hex(fnv1a64(schema_text)) << '\n';
    out << "outcome " << encode_field(outcome_to_string(model.outcome)) << '\n';
    out << "max-outcome " << format_exact(model.max_outcome) << '\n';
    out << "protected-max";
    for (double v : model.protected_max) out << ' ' << format_exact(v);
    out << '\n';
    out << schema_text;
    write_network(out, "predictor", model.predictor);
    write_network(out, "adversary", model.adversary);
    out << "end\n";
}

AdversarialModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open model file: " + path);
    }
    std::string magic;
    std::getline(in, magic);
    if (magic != "fairpred-model v1") {
        throw DataError(path + ": not a fairpred model file");
    }

    LineReader reader(in);
    AdversarialModel model;
    reader.next("manifest");
    auto hash_line = reader.next("schema-hash");
    if (hash_line.size() != 2) throw DataError("model file: malformed schema-hash");
    std::string stored_hash = hash_line[1];

    auto outcome_line = reader.next("outcome");
    if (outcome_line.size() != 2) throw DataError("model file: malformed outcome");
    model.outcome = parse_outcome(decode_field(outcome_line[1]));

    auto max_line = reader.next("max-outcome");
    if (max_line.size() != 2) throw DataError("model file: malformed max-outcome");
    model.max_outcome = parse_exact(max_line[1]);

    auto pmax_line = reader.next("protected-max");
    for (std::size_t i = 1; i < pmax_line.size(); ++i) {
        model.protected_max.push_back(parse_exact(pmax_line[i]));
    }

    auto features_line = reader.next("features");
    if (features_line.size() != 2) throw DataError("model file: malformed features header");
    std::size_t n_features = std::stoul(features_line[1]);
    for (std::size_t i = 0; i < n_features; ++i) {
        auto f = reader.next("feature");
        if (f.size() != 6) throw DataError("model file: malformed feature line");
        FeatureDescriptor descriptor;
        descriptor.kind = parse_feature_kind(f[1]);
        descriptor.name = decode_field(f[2]);
        descriptor.category = decode_field(f[3]);
        descriptor.min = parse_exact(f[4]);
        descriptor.max = parse_exact(f[5]);
        model.schema.features.push_back(std::move(descriptor));
    }
    auto indices_line = reader.next("protected-indices");
    for (std::size_t i = 1; i < indices_line.size(); ++i) {
        model.schema.protected_indices.push_back(std::stoul(indices_line[i]));
    }
    auto names_line = reader.next("protected-names");
    for (std::size_t i = 1; i < names_line.size(); ++i) {
        model.schema.protected_names.insert(decode_field(names_line[i]));
    }

    if (schema_hash(model.schema) != stored_hash) {
        throw DataError(path + ": schema hash mismatch (file corrupt or edited)");
    }

    model.predictor = read_network(reader, "predictor");
    model.adversary = read_network(reader, "adversary");
    reader.next("end");
    return model;
}

} // namespace fairpred
