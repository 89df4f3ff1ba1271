#include "jenn/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace jenn {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

FormatError::FormatError(const std::string& what, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("cannot format double");
    return std::string(buf, ptr);
}

namespace {

constexpr int kModelFormatVersion = 1;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError("error reading '" + path.string() + "'");
    return os.str();
}

// Writes through a temporary file so a failed write never leaves a partial artifact.
void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + path.string() + "'");
        out << text;
        out.flush();
        if (!out) throw IoError("error writing '" + path.string() + "'");
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

double parse_number(std::string_view token, std::size_t line, std::string_view column) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && token.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (token.empty() || ec != std::errc{} || ptr != last) {
        throw FormatError("column '" + std::string(column) + "': cannot parse '" +
                          std::string(token) + "' as a number",
                          line);
    }
    return v;
}

std::optional<Index> parse_index(std::string_view s) {
    Index v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v < 1) return std::nullopt;
    return v;
}

enum class ColumnKind { Input, Output, Partial };

struct Column {
    ColumnKind kind;
    Index k = 0;  // output index (0-based)
    Index j = 0;  // input index (0-based)
};

std::optional<Column> classify(std::string_view name) {
    if (name.starts_with("dy")) {
        const auto sep = name.find("_dx");
        if (sep == std::string_view::npos) return std::nullopt;
        const auto k = parse_index(name.substr(2, sep - 2));
        const auto j = parse_index(name.substr(sep + 3));
        if (!k || !j) return std::nullopt;
        return Column{ColumnKind::Partial, *k - 1, *j - 1};
    }
    if (name.starts_with("x")) {
        if (const auto j = parse_index(name.substr(1))) return Column{ColumnKind::Input, 0, *j - 1};
    }
    if (name.starts_with("y")) {
        if (const auto k = parse_index(name.substr(1))) return Column{ColumnKind::Output, *k - 1, 0};
    }
    return std::nullopt;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& path) {
    const std::string text = read_text(path);
    CsvTable table;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        const auto cells = split(line);
        if (table.header.empty()) {
            for (auto c : cells) table.header.emplace_back(c);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw FormatError("expected " + std::to_string(table.header.size()) + " fields, found " +
                                  std::to_string(cells.size()),
                              line_no);
        }
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            row[i] = parse_number(cells[i], line_no, table.header[i]);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw FormatError("'" + path.string() + "' has no header row");
    return table;
}

Index count_contiguous(const std::vector<Column>& cols, ColumnKind kind, const fs::path& path,
                       std::string_view prefix) {
    Index n = 0;
    for (const auto& c : cols) {
        if (c.kind == kind) n = std::max(n, (kind == ColumnKind::Input ? c.j : c.k) + 1);
    }
    for (Index i = 0; i < n; ++i) {
        bool found = false;
        for (const auto& c : cols) {
            if (c.kind == kind && (kind == ColumnKind::Input ? c.j : c.k) == i) found = true;
        }
        if (!found) {
            throw FormatError("'" + path.string() + "' is missing column " + std::string(prefix) +
                              std::to_string(i + 1), 1);
        }
    }
    return n;
}

std::vector<Column> classify_header(const CsvTable& table, const fs::path& path) {
    std::vector<Column> cols;
    for (const auto& name : table.header) {
        const auto c = classify(name);
        if (!c) throw FormatError("unknown column '" + name + "' in '" + path.string() + "'", 1);
        for (const auto& seen : cols) {
            if (seen.kind == c->kind && seen.k == c->k && seen.j == c->j) {
                throw FormatError("duplicate column '" + name + "' in '" + path.string() + "'", 1);
            }
        }
        cols.push_back(*c);
    }
    return cols;
}

std::string partial_name(Index k, Index j) {
    return "dy" + std::to_string(k + 1) + "_dx" + std::to_string(j + 1);
}

ordered_json to_json(const Vector& v) {
    ordered_json a = ordered_json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from_json(const ordered_json& a, Index expected, std::string_view what) {
    if (!a.is_array() || static_cast<Index>(a.size()) != expected) {
        throw FormatError("model: '" + std::string(what) + "' must have " +
                          std::to_string(expected) + " entries");
    }
    Vector v(expected);
    for (Index i = 0; i < expected; ++i) v(i) = a[static_cast<std::size_t>(i)].get<double>();
    return v;
}

}  // namespace

Dataset read_dataset_csv(const fs::path& path) {
    const CsvTable table = read_csv(path);
    const auto cols = classify_header(table, path);
    const Index nx = count_contiguous(cols, ColumnKind::Input, path, "x");
    const Index ny = count_contiguous(cols, ColumnKind::Output, path, "y");
    if (nx == 0 || ny == 0) {
        throw FormatError("'" + path.string() + "' needs at least one x and one y column", 1);
    }
    const Index m = static_cast<Index>(table.rows.size());
    if (m == 0) throw FormatError("'" + path.string() + "' has no data rows");

    bool any_partial = false;
    for (const auto& c : cols) {
        if (c.kind == ColumnKind::Partial) {
            if (c.k >= ny || c.j >= nx) {
                throw FormatError("partial column " + partial_name(c.k, c.j) +
                                  " is outside the x/y column range", 1);
            }
            any_partial = true;
        }
    }

    Matrix X(nx, m), Y(ny, m);
    JacobianTensor J(ny, nx, m);
    JacobianTensor gamma(ny, nx, m, 0.0);
    for (Index t = 0; t < m; ++t) {
        const auto& row = table.rows[static_cast<std::size_t>(t)];
        for (std::size_t i = 0; i < cols.size(); ++i) {
            const Column& c = cols[i];
            switch (c.kind) {
                case ColumnKind::Input: X(c.j, t) = row[i]; break;
                case ColumnKind::Output: Y(c.k, t) = row[i]; break;
                case ColumnKind::Partial:
                    J(c.k, c.j, t) = row[i];
                    gamma(c.k, c.j, t) = 1.0;
                    break;
            }
        }
    }
    Dataset d = any_partial ? make_dataset(std::move(X), std::move(Y), std::move(J))
                            : make_dataset(std::move(X), std::move(Y));
    if (any_partial) {
        d.gamma = std::move(gamma);
        d.validate();
    }
    return d;
}

void write_dataset_csv(const fs::path& path, const Dataset& data) {
    std::ostringstream os;
    std::vector<std::string> header;
    for (Index j = 0; j < data.inputs(); ++j) header.push_back("x" + std::to_string(j + 1));
    for (Index k = 0; k < data.outputs(); ++k) header.push_back("y" + std::to_string(k + 1));
    if (data.jacobian) {
        for (Index k = 0; k < data.outputs(); ++k) {
            for (Index j = 0; j < data.inputs(); ++j) header.push_back(partial_name(k, j));
        }
    }
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (Index t = 0; t < data.examples(); ++t) {
        bool first = true;
        auto put = [&](double v) {
            os << (first ? "" : ",") << format_double(v);
            first = false;
        };
        for (Index j = 0; j < data.inputs(); ++j) put(data.X(j, t));
        for (Index k = 0; k < data.outputs(); ++k) put(data.Y(k, t));
        if (data.jacobian) {
            for (Index k = 0; k < data.outputs(); ++k) {
                for (Index j = 0; j < data.inputs(); ++j) put((*data.jacobian)(k, j, t));
            }
        }
        os << '\n';
    }
    write_text(path, os.str());
}

Matrix read_inputs_csv(const fs::path& path, Index inputs) {
    const CsvTable table = read_csv(path);
    const auto cols = classify_header(table, path);
    const Index nx = count_contiguous(cols, ColumnKind::Input, path, "x");
    if (nx != inputs) {
        throw FormatError("'" + path.string() + "' has " + std::to_string(nx) +
                          " input columns, model expects " + std::to_string(inputs), 1);
    }
    const Index m = static_cast<Index>(table.rows.size());
    Matrix X(nx, m);
    for (Index t = 0; t < m; ++t) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i].kind == ColumnKind::Input) X(cols[i].j, t) = table.rows[static_cast<std::size_t>(t)][i];
        }
    }
    return X;
}

JacobianTensor read_gamma_csv(const fs::path& path, Index outputs, Index inputs, Index examples) {
    const CsvTable table = read_csv(path);
    const auto cols = classify_header(table, path);
    const Index rows = static_cast<Index>(table.rows.size());
    if (rows != 1 && rows != examples) {
        throw FormatError("gamma file '" + path.string() + "' must have 1 or " +
                          std::to_string(examples) + " rows, found " + std::to_string(rows));
    }
    JacobianTensor gamma(outputs, inputs, examples, 1.0);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const Column& c = cols[i];
        if (c.kind != ColumnKind::Partial || c.k >= outputs || c.j >= inputs) {
            throw FormatError("gamma file column '" + table.header[i] +
                              "' is not a partial of this dataset", 1);
        }
        for (Index t = 0; t < examples; ++t) {
            const double v = table.rows[static_cast<std::size_t>(rows == 1 ? 0 : t)][i];
            if (!(v >= 0.0)) {
                throw FormatError("gamma values must be >= 0", static_cast<std::size_t>(t) + 2);
            }
            gamma(c.k, c.j, t) = v;
        }
    }
    return gamma;
}

void write_predictions_csv(const fs::path& path, const Matrix& X, const RawPrediction& p) {
    const Index nx = X.rows();
    const Index ny = p.Y.rows();
    std::ostringstream os;
    bool first = true;
    auto head = [&](const std::string& s) {
        os << (first ? "" : ",") << s;
        first = false;
    };
    for (Index j = 0; j < nx; ++j) head("x" + std::to_string(j + 1));
    for (Index k = 0; k < ny; ++k) head("y" + std::to_string(k + 1));
    for (Index k = 0; k < ny; ++k) {
        for (Index j = 0; j < nx; ++j) head(partial_name(k, j));
    }
    os << '\n';
    for (Index t = 0; t < X.cols(); ++t) {
        first = true;
        for (Index j = 0; j < nx; ++j) head(format_double(X(j, t)));
        for (Index k = 0; k < ny; ++k) head(format_double(p.Y(k, t)));
        for (Index k = 0; k < ny; ++k) {
            for (Index j = 0; j < nx; ++j) head(format_double(p.J(k, j, t)));
        }
        os << '\n';
    }
    write_text(path, os.str());
}

std::string model_to_string(const Model& model) {
    const Architecture& arch = model.architecture();
    const NormalizationStats& norm = model.normalization();
    ordered_json j;
    j["format"] = "jenn-model";
    j["version"] = kModelFormatVersion;
    j["architecture"] = {{"layer_sizes", arch.layer_sizes},
                         {"hidden_activation", std::string(to_string(arch.hidden_activation))},
                         {"output_activation", std::string(to_string(arch.output_activation))}};
    j["normalization"] = {{"mu_x", to_json(norm.mu_x)},
                          {"sigma_x", to_json(norm.sigma_x)},
                          {"mu_y", to_json(norm.mu_y)},
                          {"sigma_y", to_json(norm.sigma_y)}};
    ordered_json layers = ordered_json::array();
    const Parameters& p = model.parameters();
    for (std::size_t l = 0; l < p.layers(); ++l) {
        ordered_json W = ordered_json::array();
        for (Index r = 0; r < p.W[l].rows(); ++r) W.push_back(to_json(p.W[l].row(r).transpose()));
        layers.push_back({{"W", W}, {"b", to_json(p.b[l])}});
    }
    j["layers"] = layers;
    return j.dump(1) + "\n";
}

Model model_from_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw FormatError(std::string("model: invalid JSON: ") + e.what());
    }
    try {
        if (j.value("format", "") != "jenn-model") throw FormatError("model: not a jenn-model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw FormatError("model: unsupported format version " + std::to_string(version));
        }
        Architecture arch;
        const auto& a = j.at("architecture");
        arch.layer_sizes = a.at("layer_sizes").get<std::vector<Index>>();
        arch.hidden_activation = parse_activation(a.at("hidden_activation").get<std::string>());
        arch.output_activation = parse_activation(a.at("output_activation").get<std::string>());
        arch.validate();

        const auto& n = j.at("normalization");
        NormalizationStats norm;
        norm.mu_x = vector_from_json(n.at("mu_x"), arch.inputs(), "mu_x");
        norm.sigma_x = vector_from_json(n.at("sigma_x"), arch.inputs(), "sigma_x");
        norm.mu_y = vector_from_json(n.at("mu_y"), arch.outputs(), "mu_y");
        norm.sigma_y = vector_from_json(n.at("sigma_y"), arch.outputs(), "sigma_y");

        const auto& layers = j.at("layers");
        if (!layers.is_array() || layers.size() + 1 != arch.layer_sizes.size()) {
            throw FormatError("model: layer count does not match architecture");
        }
        Parameters p;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const Index rows = arch.layer_sizes[l + 1];
            const Index cols = arch.layer_sizes[l];
            const auto& Wj = layers[l].at("W");
            if (!Wj.is_array() || static_cast<Index>(Wj.size()) != rows) {
                throw FormatError("model: W of layer " + std::to_string(l + 1) + " has wrong rows");
            }
            Matrix W(rows, cols);
            for (Index r = 0; r < rows; ++r) {
                W.row(r) = vector_from_json(Wj[static_cast<std::size_t>(r)], cols, "W row").transpose();
            }
            p.W.push_back(std::move(W));
            p.b.push_back(vector_from_json(layers[l].at("b"), rows, "b"));
        }
        return Model(std::move(arch), std::move(p), std::move(norm));
    } catch (const ordered_json::exception& e) {
        throw FormatError(std::string("model: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("model: ") + e.what());
    }
}

void save_model(const fs::path& path, const Model& model) { write_text(path, model_to_string(model)); }

Model load_model(const fs::path& path) { return model_from_string(read_text(path)); }

void write_cost_history_csv(const fs::path& path, const std::vector<double>& history) {
    std::ostringstream os;
    os << "epoch,cost\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        os << i + 1 << ',' << format_double(history[i]) << '\n';
    }
    write_text(path, os.str());
}

void write_trace_csv(const fs::path& path, const OptTrace& trace) {
    std::ostringstream os;
    const Index dims = trace.iterates.empty() ? 0 : trace.iterates.front().size();
    os << "iter";
    for (Index d = 0; d < dims; ++d) os << ",x" << d + 1;
    os << ",value\n";
    for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
        os << i;
        for (Index d = 0; d < dims; ++d) os << ',' << format_double(trace.iterates[i](d));
        os << ',' << format_double(trace.values[i]) << '\n';
    }
    write_text(path, os.str());
}

void write_validation_csv(const fs::path& path, const ValidationReport& report) {
    std::ostringstream os;
    os << "experiment,model,samples,architecture,r_squared,error_std,partial_r_squared,"
          "runtime_seconds,final_cost\n";
    for (const auto& r : report.results) {
        os << r.experiment << ',' << r.model << ',' << r.samples << ",\"" << r.architecture
           << "\"," << format_double(r.r_squared) << ',' << format_double(r.error_std) << ",\"";
        for (std::size_t i = 0; i < r.partial_r_squared.size(); ++i) {
            os << (i ? ";" : "") << format_double(r.partial_r_squared[i]);
        }
        os << "\"," << format_double(r.runtime_seconds) << ',' << format_double(r.final_cost)
           << '\n';
    }
    write_text(path, os.str());
}

void write_curve_csv(const fs::path& path, const CurveData& curve) {
    std::ostringstream os;
    for (Index d = 0; d < curve.points.rows(); ++d) os << 'x' << d + 1 << ',';
    os << "truth,jenn,nn\n";
    for (Index t = 0; t < curve.points.cols(); ++t) {
        for (Index d = 0; d < curve.points.rows(); ++d) os << format_double(curve.points(d, t)) << ',';
        os << format_double(curve.truth(t)) << ',' << format_double(curve.jenn(t)) << ','
           << format_double(curve.nn(t)) << '\n';
    }
    write_text(path, os.str());
}

void write_noise_csv(const fs::path& path, const NoiseStudyReport& report) {
    std::ostringstream os;
    os << "step,mean_fd_error_percent,jenn_r_squared,nn_r_squared\n";
    for (const auto& p : report.points) {
        os << format_double(p.step) << ',' << format_double(p.mean_error_percent) << ','
           << format_double(p.jenn_r_squared) << ',' << format_double(report.nn_r_squared) << '\n';
    }
    write_text(path, os.str());
}

void write_runtime_csv(const fs::path& path, const RuntimeReport& report) {
    std::ostringstream os;
    os << "samples,seconds_per_epoch\n";
    for (std::size_t i = 0; i < report.sample_sizes.size(); ++i) {
        os << report.sample_sizes[i] << ',' << format_double(report.seconds_per_epoch[i]) << '\n';
    }
    write_text(path, os.str());
}

void write_rosenbrock_summary_csv(const fs::path& path, const RosenbrockStudyReport& report) {
    std::ostringstream os;
    os << "model,iterations,final_x1,final_x2,final_value,distance_to_optimum,termination,"
          "random_start_mean_distance,random_start_max_distance\n";
    for (const auto& r : report.runs) {
        const Vector& x = r.trace.final_point();
        os << r.name << ',' << r.trace.iterates.size() - 1 << ',' << format_double(x(0)) << ','
           << format_double(x(1)) << ',' << format_double(r.trace.values.back()) << ','
           << format_double(r.final_distance) << ',' << to_string(r.trace.termination_reason) << ','
           << format_double(r.start_dispersion_mean) << ','
           << format_double(r.start_dispersion_max) << '\n';
    }
    write_text(path, os.str());
}

}  // namespace jenn
