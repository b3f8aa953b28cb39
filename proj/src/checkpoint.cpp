// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace mlmkit {

namespace {

constexpr const char* kFormatLine = "format 1";

std::string dims_str(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    return os.str();
}

template <class T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const char* what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError(std::string("checkpoint truncated while reading ") + what);
    return v;
}

}  // namespace

void write_tensors(const std::filesystem::path& dir, const std::vector<const Parameter*>& params) {
    std::filesystem::create_directories(dir);
    std::ofstream bin(dir / "params.bin", std::ios::binary);
    std::ofstream man(dir / "manifest.txt", std::ios::binary);
    if (!bin || !man) throw IoError("cannot write checkpoint files in " + dir.string());
    man << kFormatLine << '\n';
    for (const Parameter* p : params) {
        write_pod<uint32_t>(bin, static_cast<uint32_t>(p->name.size()));
        bin.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_pod<uint32_t>(bin, static_cast<uint32_t>(p->value.rank()));
        for (int64_t d : p->value.shape) write_pod<int64_t>(bin, d);
        bin.write(reinterpret_cast<const char*>(p->value.data.data()),
                  static_cast<std::streamsize>(p->value.data.size() * sizeof(float)));
        man << p->name << '\t' << dims_str(p->value.shape) << '\n';
    }
    if (!bin || !man) throw IoError("failed writing checkpoint in " + dir.string());
}

std::vector<std::pair<std::string, Tensor>> read_tensors(const std::filesystem::path& dir) {
    std::ifstream man(dir / "manifest.txt", std::ios::binary);
    if (!man) throw IoError("cannot read " + (dir / "manifest.txt").string());
    std::string line;
    if (!std::getline(man, line) || line != kFormatLine)
        throw DataError("unsupported checkpoint format: " + line);
    std::vector<std::pair<std::string, std::string>> manifest;
    while (std::getline(man, line)) {
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) throw DataError("malformed manifest line: " + line);
        manifest.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }

    std::ifstream bin(dir / "params.bin", std::ios::binary);
    if (!bin) throw IoError("cannot read " + (dir / "params.bin").string());
    std::vector<std::pair<std::string, Tensor>> out;
    for (const auto& [want_name, want_dims] : manifest) {
        const uint32_t name_len = read_pod<uint32_t>(bin, "name length");
        std::string name(name_len, '\0');
        bin.read(name.data(), name_len);
        if (!bin) throw DataError("checkpoint truncated while reading a name");
        if (name != want_name)
            throw DataError("checkpoint order mismatch: manifest says '" + want_name +
                            "', binary has '" + name + "'");
        const uint32_t rank = read_pod<uint32_t>(bin, "rank");
        if (rank > 8) throw DataError("implausible tensor rank in checkpoint");
        std::vector<int64_t> shape(rank);
        for (uint32_t i = 0; i < rank; ++i) shape[i] = read_pod<int64_t>(bin, "dimension");
        if (dims_str(shape) != want_dims)
            throw DataError("shape mismatch for '" + name + "': manifest " + want_dims + ", binary " +
                            dims_str(shape));
        Tensor t = Tensor::zeros(shape);
        bin.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!bin) throw DataError("checkpoint truncated in payload of '" + name + "'");
        out.emplace_back(std::move(name), std::move(t));
    }
    char extra;
    if (bin.read(&extra, 1)) throw DataError("checkpoint has trailing bytes beyond the manifest");
    return out;
}

void save_checkpoint(const std::filesystem::path& dir, const EncoderModel& model) {
    write_tensors(dir, model.parameters());
    std::ofstream cfg(dir / "model_config.txt", std::ios::binary);
    if (!cfg) throw IoError("cannot write " + (dir / "model_config.txt").string());
    const ModelConfig& c = model.config();
    char buf[64];
    auto put_f = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        cfg << key << '=' << buf << '\n';
    };
    cfg << "layers=" << c.layers << '\n'
        << "hidden=" << c.hidden << '\n'
        << "heads=" << c.heads << '\n'
        << "ffn_hidden=" << c.ffn_hidden << '\n'
        << "vocab_size=" << c.vocab_size << '\n'
        << "max_positions=" << c.max_positions << '\n';
    put_f("dropout", c.dropout);
    put_f("attention_dropout", c.attention_dropout);
    cfg << "tie_lm_head=" << (c.tie_lm_head ? 1 : 0) << '\n'
        << "seq_classes=" << model.seq_classes() << '\n'
        << "tok_labels=" << model.tok_labels() << '\n';
    if (!cfg) throw IoError("failed writing model config");
}

EncoderModel load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream cfg(dir / "model_config.txt", std::ios::binary);
    if (!cfg) throw IoError("cannot read " + (dir / "model_config.txt").string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(cfg, line)) {
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw DataError("malformed model config line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto geti = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw DataError(std::string("model config missing key ") + key);
        return std::stoll(it->second);
    };
    auto getf = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw DataError(std::string("model config missing key ") + key);
        return std::stod(it->second);
    };
    ModelConfig c;
    c.layers = geti("layers");
    c.hidden = geti("hidden");
    c.heads = geti("heads");
    c.ffn_hidden = geti("ffn_hidden");
    c.vocab_size = geti("vocab_size");
    c.max_positions = geti("max_positions");
    c.dropout = getf("dropout");
    c.attention_dropout = getf("attention_dropout");
    c.tie_lm_head = geti("tie_lm_head") != 0;

    EncoderModel model = EncoderModel::init(c, 0);
    const int64_t seq_classes = geti("seq_classes");
    const int64_t tok_labels = geti("tok_labels");
    if (seq_classes > 0) model.attach_seq_head(seq_classes, 0);
    if (tok_labels > 0) model.attach_tok_head(tok_labels, 0);

    auto tensors = read_tensors(dir);
    auto params = model.parameters();
    if (tensors.size() != params.size())
        throw DataError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, model has " +
                        std::to_string(params.size()) + " parameters");
    for (size_t i = 0; i < params.size(); ++i) {
        auto& [name, tensor] = tensors[i];
        if (name != params[i]->name)
            throw DataError("parameter name mismatch: checkpoint '" + name + "' vs model '" +
                            params[i]->name + "'");
        if (tensor.shape != params[i]->value.shape)
            throw DataError("parameter shape mismatch for '" + name + "'");
        params[i]->value = std::move(tensor);
    }
    return model;
}

}  // namespace mlmkit
