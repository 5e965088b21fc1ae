#include "vitalcast/serialize.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "vitalcast/error.hpp"

namespace vitalcast {

namespace {

constexpr char kMagic[] = "ATNF1\n";

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_sizes(const std::vector<std::size_t>& xs) {
    if (xs.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(xs[i]);
    }
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    if (s == "-") return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<std::size_t>(std::stoull(item)));
    return out;
}

std::string join_channels(const std::vector<Channel>& cs) {
    if (cs.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (i) out += ',';
        out += channel_name(cs[i]);
    }
    return out;
}

std::vector<Channel> parse_channels(const std::string& s) {
    std::vector<Channel> out;
    if (s == "-") return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(channel_from_name(item));
    return out;
}

void put_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_doubles_le(std::ostream& out, const std::vector<double>& xs) {
    for (double x : xs) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        put_u64_le(out, bits);
    }
}

struct Reader {
    std::ifstream in;
    std::size_t offset = 0;

    explicit Reader(const std::string& path) : in(path, std::ios::binary) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw IoError(msg + " at offset " + std::to_string(offset));
    }

    std::string line() {
        std::string s;
        char c;
        while (in.get(c)) {
            ++offset;
            if (c == '\n') return s;
            s += c;
        }
        fail("unexpected end of file inside text section");
    }

    std::uint64_t u64_le() {
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        if (in.gcount() != 8) fail("truncated while reading 8 bytes");
        offset += 8;
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    double f64_le() {
        const std::uint64_t bits = u64_le();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

} // namespace

void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << kMagic;

    const TrainConfig& c = m.config;
    out << "!model " << model_kind_name(c.model_kind) << '\n';
    out << "!attention " << (c.attention ? "on" : "off") << '\n';
    out << "!target " << channel_name(c.target) << '\n';
    out << "!covariates " << join_channels(c.covariates) << '\n';
    out << "!lr " << fmt_double(c.lr) << '\n';
    out << "!beta1 " << fmt_double(c.beta1) << '\n';
    out << "!beta2 " << fmt_double(c.beta2) << '\n';
    out << "!eps " << fmt_double(c.eps) << '\n';
    out << "!batch_size " << c.batch_size << '\n';
    out << "!max_epochs " << c.max_epochs << '\n';
    out << "!patience " << c.patience << '\n';
    out << "!grad_clip " << fmt_double(c.grad_clip) << '\n';
    out << "!seed " << c.seed << '\n';
    out << "!history " << c.history << '\n';
    out << "!horizon " << c.horizon << '\n';
    out << "!stacks " << c.stacks << '\n';
    out << "!blocks_per_stack " << c.blocks_per_stack << '\n';
    out << "!width " << c.width << '\n';
    out << "!kernels " << join_sizes(c.kernels) << '\n';
    out << "!ratios " << join_sizes(c.ratios) << '\n';
    out << "!best_epoch " << m.best_epoch << '\n';

    std::vector<NamedParam> tensors = m.model->params();
    const auto train_hist = tensor_of({m.train_loss.size()}, m.train_loss);
    const auto val_hist = tensor_of({m.val_loss.size()}, m.val_loss);
    tensors.push_back({"history.train_loss", train_hist});
    tensors.push_back({"history.val_loss", val_hist});

    for (const auto& t : tensors) {
        out << t.name;
        for (std::size_t d : t.tensor->shape) out << ' ' << d;
        out << '\n';
    }
    out << ".\n";

    std::uint64_t payload_bytes = 0;
    for (const auto& t : tensors) {
        put_doubles_le(out, t.tensor->data);
        payload_bytes += 8ull * t.tensor->numel();
    }
    put_u64_le(out, payload_bytes);
    if (!out) throw IoError("failed while writing '" + path + "'");
}

TrainedModel load_model(const std::string& path) {
    Reader r(path);
    if (!r.in) throw IoError("cannot open '" + path + "' for reading");

    {
        char magic[6];
        r.in.read(magic, 6);
        if (r.in.gcount() != 6 || std::memcmp(magic, kMagic, 6) != 0)
            r.fail("bad magic (not a model file)");
        r.offset = 6;
    }

    std::map<std::string, std::string> kv;
    std::string line;
    // Config lines come first; the first line without '!' starts the tensor
    // headers and is handed back via `pending`.
    std::string pending;
    while (true) {
        line = r.line();
        if (line.empty() || line[0] != '!') {
            pending = line;
            break;
        }
        const auto sp = line.find(' ');
        if (sp == std::string::npos) r.fail("config line '" + line + "' has no value");
        kv[line.substr(1, sp - 1)] = line.substr(sp + 1);
    }

    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) r.fail(std::string("missing config key '") + key + "'");
        return it->second;
    };

    TrainedModel m;
    TrainConfig& c = m.config;
    try {
        c.model_kind = model_kind_from_name(need("model"));
        c.attention = need("attention") == "on";
        c.target = channel_from_name(need("target"));
        c.covariates = parse_channels(need("covariates"));
        c.lr = std::stod(need("lr"));
        c.beta1 = std::stod(need("beta1"));
        c.beta2 = std::stod(need("beta2"));
        c.eps = std::stod(need("eps"));
        c.batch_size = std::stoull(need("batch_size"));
        c.max_epochs = std::stoull(need("max_epochs"));
        c.patience = std::stoull(need("patience"));
        c.grad_clip = std::stod(need("grad_clip"));
        c.seed = std::stoull(need("seed"));
        c.history = std::stoull(need("history"));
        c.horizon = std::stoull(need("horizon"));
        c.stacks = std::stoull(need("stacks"));
        c.blocks_per_stack = std::stoull(need("blocks_per_stack"));
        c.width = std::stoull(need("width"));
        c.kernels = parse_sizes(need("kernels"));
        c.ratios = parse_sizes(need("ratios"));
        m.best_epoch = std::stoull(need("best_epoch"));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        r.fail(std::string("invalid config value: ") + e.what());
    }

    m.model = build_model(c);
    std::vector<NamedParam> expected = m.model->params();

    struct Header {
        std::string name;
        std::vector<std::size_t> shape;
        std::size_t numel;
    };
    std::vector<Header> headers;
    for (line = pending;; line = r.line()) {
        if (line == ".") break;
        std::stringstream ss(line);
        Header h;
        if (!(ss >> h.name)) r.fail("blank tensor header line");
        std::size_t d, n = 1;
        h.numel = 0;
        while (ss >> d) {
            h.shape.push_back(d);
            n *= d;
        }
        if (!ss.eof()) r.fail("malformed tensor header '" + line + "'");
        h.numel = h.shape.empty() ? 0 : n;
        headers.push_back(std::move(h));
    }

    if (headers.size() != expected.size() + 2)
        r.fail("expected " + std::to_string(expected.size() + 2) + " tensors, found " +
               std::to_string(headers.size()));

    std::uint64_t payload_bytes = 0;
    for (std::size_t i = 0; i < headers.size(); ++i) {
        const Header& h = headers[i];
        std::vector<double> data(h.numel);
        for (auto& v : data) v = r.f64_le();
        payload_bytes += 8ull * h.numel;

        if (i < expected.size()) {
            NamedParam& p = expected[i];
            if (h.name != p.name)
                r.fail("tensor " + std::to_string(i) + " is '" + h.name + "', expected '" +
                       p.name + "'");
            if (h.shape != p.tensor->shape)
                r.fail("tensor '" + h.name + "' has shape " + Tensor::shape_str(h.shape) +
                       ", expected " + Tensor::shape_str(p.tensor->shape));
            p.tensor->data = std::move(data);
        } else if (h.name == "history.train_loss") {
            m.train_loss = std::move(data);
        } else if (h.name == "history.val_loss") {
            m.val_loss = std::move(data);
        } else {
            r.fail("unexpected trailing tensor '" + h.name + "'");
        }
    }

    const std::uint64_t declared = r.u64_le();
    if (declared != payload_bytes)
        r.fail("payload byte count mismatch: trailer says " + std::to_string(declared) +
               ", read " + std::to_string(payload_bytes));
    char extra;
    if (r.in.get(extra)) r.fail("trailing bytes after payload trailer");
    return m;
}

} // namespace vitalcast
