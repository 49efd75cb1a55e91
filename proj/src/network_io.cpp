#include "diffverify/network.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <algorithm>
#include <sstream>

namespace dv {

namespace {

using json = nlohmann::json;

struct NumberLine {
    std::size_t line_no;
    std::vector<double> values;
};

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(std::string_view token, std::size_t line_no)
{
    // from_chars rejects a leading '+', which some exporters emit.
    if (!token.empty() && token.front() == '+') {
        token.remove_prefix(1);
    }
    double value = 0.0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("non-numeric token '" + std::string(token) + "'", line_no);
    }
    return value;
}

// Splits NNet text into comma-separated numeric lines, skipping "//" comments
// and blank lines.
std::vector<NumberLine> tokenize_nnet(std::string_view source)
{
    std::vector<NumberLine> lines;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
        auto end = source.find('\n', pos);
        if (end == std::string_view::npos) {
            end = source.size();
        }
        ++line_no;
        const auto line = trim(source.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty() || line.starts_with("//")) {
            if (end == source.size()) {
                break;
            }
            continue;
        }
        NumberLine parsed{line_no, {}};
        std::size_t start = 0;
        while (start <= line.size()) {
            auto comma = line.find(',', start);
            if (comma == std::string_view::npos) {
                comma = line.size();
            }
            const auto token = trim(line.substr(start, comma - start));
            if (!token.empty()) {
                parsed.values.push_back(parse_number(token, line_no));
            }
            start = comma + 1;
        }
        lines.push_back(std::move(parsed));
        if (end == source.size()) {
            break;
        }
    }
    return lines;
}

class LineCursor {
public:
    explicit LineCursor(std::vector<NumberLine> lines)
        : lines_(std::move(lines))
    {
    }

    const NumberLine& next(const char* what)
    {
        if (index_ >= lines_.size()) {
            const std::size_t last = lines_.empty() ? 0 : lines_.back().line_no;
            throw ParseError(std::string("unexpected end of file while reading ") + what, last);
        }
        return lines_[index_++];
    }

    const NumberLine& expect(std::size_t count, const char* what)
    {
        const NumberLine& line = next(what);
        if (line.values.size() != count) {
            throw ParseError(std::string("row length mismatch in ") + what + ": expected "
                                 + std::to_string(count) + " values, found "
                                 + std::to_string(line.values.size()),
                             line.line_no);
        }
        return line;
    }

private:
    std::vector<NumberLine> lines_;
    std::size_t index_ = 0;
};

Eigen::Index as_count(double value, std::size_t line_no, const char* what)
{
    if (value < 0 || value != static_cast<double>(static_cast<long long>(value))) {
        throw ParseError(std::string("malformed header: ") + what
                             + " must be a non-negative integer",
                         line_no);
    }
    return static_cast<Eigen::Index>(value);
}

Vector to_vector(const std::vector<double>& values, std::size_t count)
{
    Vector out(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        out[static_cast<Eigen::Index>(i)] = values[i];
    }
    return out;
}

// Maps a byte offset into the 1-based line containing it.
std::size_t line_of_offset(std::string_view source, std::size_t offset)
{
    offset = std::min(offset, source.size());
    return 1 + static_cast<std::size_t>(std::count(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::string render(const Vector& v, int precision = 17)
{
    std::ostringstream out;
    out << std::setprecision(precision);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << v[i] << ',';
    }
    return out.str();
}

} // namespace

Network parse_nnet(std::string_view source)
{
    LineCursor cursor(tokenize_nnet(source));

    const NumberLine& header = cursor.next("header");
    if (header.values.size() < 4) {
        throw ParseError("malformed header: expected numLayers, inputSize, outputSize, maxLayerSize",
                         header.line_no);
    }
    const auto layer_count = as_count(header.values[0], header.line_no, "numLayers");
    const auto input_size = as_count(header.values[1], header.line_no, "inputSize");
    const auto output_size = as_count(header.values[2], header.line_no, "outputSize");
    if (layer_count == 0) {
        throw ParseError("malformed header: numLayers must be positive", header.line_no);
    }

    const NumberLine& sizes_line = cursor.expect(static_cast<std::size_t>(layer_count + 1), "layer sizes");
    std::vector<Eigen::Index> sizes;
    for (double v : sizes_line.values) {
        const auto size = as_count(v, sizes_line.line_no, "layer size");
        if (size == 0) {
            throw ParseError("shape-chain violation: layer with zero neurons", sizes_line.line_no);
        }
        sizes.push_back(size);
    }
    if (sizes.front() != input_size || sizes.back() != output_size) {
        throw ParseError("malformed header: layer sizes disagree with inputSize/outputSize",
                         sizes_line.line_no);
    }

    cursor.next("symmetric flag");
    const auto n = static_cast<std::size_t>(input_size);
    Normalization norm;
    norm.input_min = to_vector(cursor.expect(n, "input minimums").values, n);
    norm.input_max = to_vector(cursor.expect(n, "input maximums").values, n);
    const auto& means = cursor.expect(n + 1, "means").values;
    const auto& ranges = cursor.expect(n + 1, "ranges").values;
    norm.input_mean = to_vector(means, n);
    norm.input_range = to_vector(ranges, n);
    norm.output_mean = means[n];
    norm.output_range = ranges[n];

    std::vector<Layer> layers;
    for (Eigen::Index k = 0; k < layer_count; ++k) {
        const auto rows_in = sizes[static_cast<std::size_t>(k)];
        const auto cols_out = sizes[static_cast<std::size_t>(k + 1)];
        Layer layer{Matrix(rows_in, cols_out), Vector(cols_out)};
        // NNet stores one row per target neuron.
        for (Eigen::Index j = 0; j < cols_out; ++j) {
            const auto& row = cursor.expect(static_cast<std::size_t>(rows_in), "weight row").values;
            for (Eigen::Index i = 0; i < rows_in; ++i) {
                layer.weights(i, j) = row[static_cast<std::size_t>(i)];
            }
        }
        for (Eigen::Index j = 0; j < cols_out; ++j) {
            layer.bias[j] = cursor.expect(1, "bias row").values[0];
        }
        layers.push_back(std::move(layer));
    }

    try {
        return Network(input_size, std::move(layers), std::move(norm));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), 0);
    }
}

Network parse_json_network(std::string_view source)
{
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), line_of_offset(source, e.byte));
    }

    try {
        if (!doc.is_object() || !doc.contains("inputs") || !doc.contains("layers")) {
            throw ParseError("malformed header: expected keys \"inputs\" and \"layers\"", 1);
        }
        const auto inputs = doc.at("inputs").get<long long>();
        if (inputs <= 0) {
            throw ParseError("shape-chain violation: \"inputs\" must be positive", 1);
        }

        std::vector<Layer> layers;
        const auto& layer_docs = doc.at("layers");
        for (std::size_t k = 0; k < layer_docs.size(); ++k) {
            const auto& ld = layer_docs.at(k);
            const auto& rows = ld.at("weights");
            const auto& bias = ld.at("bias");
            const auto where = "layer " + std::to_string(k + 1);
            if (rows.empty() || bias.empty()) {
                throw ParseError("shape-chain violation: " + where + " has zero neurons", 0);
            }
            const auto cols = static_cast<Eigen::Index>(rows.at(0).size());
            if (cols == 0) {
                throw ParseError("shape-chain violation: " + where + " has zero neurons", 0);
            }
            Layer layer{Matrix(static_cast<Eigen::Index>(rows.size()), cols),
                        Vector(static_cast<Eigen::Index>(bias.size()))};
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (static_cast<Eigen::Index>(rows.at(i).size()) != cols) {
                    throw ParseError("row length mismatch in " + where + " weights row "
                                         + std::to_string(i + 1),
                                     0);
                }
                for (Eigen::Index j = 0; j < cols; ++j) {
                    const auto& cell = rows.at(i).at(static_cast<std::size_t>(j));
                    if (!cell.is_number()) {
                        throw ParseError("non-numeric token in " + where + " weights", 0);
                    }
                    layer.weights(static_cast<Eigen::Index>(i), j) = cell.get<double>();
                }
            }
            for (std::size_t j = 0; j < bias.size(); ++j) {
                if (!bias.at(j).is_number()) {
                    throw ParseError("non-numeric token in " + where + " bias", 0);
                }
                layer.bias[static_cast<Eigen::Index>(j)] = bias.at(j).get<double>();
            }
            layers.push_back(std::move(layer));
        }

        std::optional<Normalization> norm;
        if (doc.contains("normalization")) {
            const auto& nd = doc.at("normalization");
            auto vec = [&](const char* key) {
                const auto values = nd.at(key).get<std::vector<double>>();
                return to_vector(values, values.size());
            };
            norm = Normalization{vec("input_min"), vec("input_max"), vec("input_mean"),
                                 vec("input_range"), nd.at("output_mean").get<double>(),
                                 nd.at("output_range").get<double>()};
        }
        return Network(static_cast<Eigen::Index>(inputs), std::move(layers), std::move(norm));
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed network JSON: ") + e.what(), 0);
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), 0);
    }
}

Network parse_network(std::string_view source, NetworkFormat format)
{
    return format == NetworkFormat::nnet ? parse_nnet(source) : parse_json_network(source);
}

std::string to_json(const Network& net)
{
    json doc;
    doc["inputs"] = net.input_count();
    doc["layers"] = json::array();
    for (const Layer& layer : net.layers()) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
                row.push_back(layer.weights(i, j));
            }
            rows.push_back(std::move(row));
        }
        json bias = json::array();
        for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
            bias.push_back(layer.bias[j]);
        }
        doc["layers"].push_back({{"weights", std::move(rows)}, {"bias", std::move(bias)}});
    }
    if (net.normalization()) {
        const auto& norm = *net.normalization();
        auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
        doc["normalization"] = {{"input_min", vec(norm.input_min)},
                                {"input_max", vec(norm.input_max)},
                                {"input_mean", vec(norm.input_mean)},
                                {"input_range", vec(norm.input_range)},
                                {"output_mean", norm.output_mean},
                                {"output_range", norm.output_range}};
    }
    return doc.dump(2);
}

std::string to_nnet(const Network& net)
{
    const auto sizes = net.topology();
    const auto n = net.input_count();
    std::ostringstream out;
    out << std::setprecision(17);
    out << "// written by dvcli\n";
    out << net.layer_count() << ',' << n << ',' << net.output_count() << ','
        << *std::max_element(sizes.begin(), sizes.end()) << ",\n";
    for (auto size : sizes) {
        out << size << ',';
    }
    out << "\n0,\n";

    Normalization norm;
    if (net.normalization()) {
        norm = *net.normalization();
    } else {
        const double big = std::numeric_limits<double>::max();
        norm.input_min = Vector::Constant(n, -big);
        norm.input_max = Vector::Constant(n, big);
        norm.input_mean = Vector::Zero(n);
        norm.input_range = Vector::Ones(n);
    }
    out << render(norm.input_min) << '\n' << render(norm.input_max) << '\n';
    out << render(norm.input_mean) << norm.output_mean << ",\n";
    out << render(norm.input_range) << norm.output_range << ",\n";

    for (const Layer& layer : net.layers()) {
        for (Eigen::Index j = 0; j < layer.outputs(); ++j) {
            out << render(layer.weights.col(j)) << '\n';
        }
        for (Eigen::Index j = 0; j < layer.outputs(); ++j) {
            out << layer.bias[j] << ",\n";
        }
    }
    return out.str();
}

namespace {

bool has_nnet_extension(const std::string& path)
{
    return path.size() >= 5 && path.compare(path.size() - 5, 5, ".nnet") == 0;
}

} // namespace

Network load_network(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open network file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_network(buffer.str(), has_nnet_extension(path) ? NetworkFormat::nnet
                                                               : NetworkFormat::json);
}

void save_network(const Network& net, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write network file '" + path + "'");
    }
    out << (has_nnet_extension(path) ? to_nnet(net) : to_json(net) + "\n");
}

} // namespace dv
