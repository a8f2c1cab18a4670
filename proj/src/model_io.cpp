#include "tnrd/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace tnrd {

namespace {

constexpr int kFormatVersion = 1;

void write_doubles(std::ostream& out, const std::vector<double>& v) {
    for (size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
    out << "\n";
}

std::vector<double> read_doubles(std::istream& in, size_t n, const char* what) {
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i)
        if (!(in >> v[i])) throw std::runtime_error(std::string("model: truncated ") + what);
    return v;
}

void expect(std::istream& in, const std::string& token) {
    std::string t;
    if (!(in >> t) || t != token)
        throw std::runtime_error("model: expected '" + token + "', got '" + t + "'");
}

}  // namespace

void write_model(const Model& m, std::ostream& out) {
    m.validate();
    out << std::setprecision(17);
    out << "tnrd-model " << kFormatVersion << "\n";
    out << "problem " << m.problem.name() << " ";
    switch (m.problem.task) {
        case ProblemKind::denoise: out << m.problem.sigma; break;
        case ProblemKind::sisr: out << m.problem.factor; break;
        case ProblemKind::deblock: out << m.problem.quality; break;
    }
    out << "\n";
    out << "stages " << m.stage_count() << "\n";
    out << "kernel " << m.kernel_size << "\n";
    out << "filters " << m.filter_count << "\n";
    out << "rbf " << (m.rbf.kind == RbfKind::gaussian ? "gaussian" : "triangular") << " "
        << m.rbf.center_min << " " << m.rbf.center_step << " " << m.rbf.center_count << " "
        << m.rbf.gamma << "\n";
    out << "pad " << m.pad_border << "\n";
    for (int t = 0; t < m.stage_count(); ++t) {
        const StageParams& s = m.stages[t];
        out << "stage " << t << "\n";
        out << "lambda_raw " << s.lambda_raw << "\n";
        for (int i = 0; i < m.filter_count; ++i) {
            out << "omega " << i << " ";
            write_doubles(out, s.filters[i].omega);
        }
        for (int i = 0; i < m.filter_count; ++i) {
            out << "w " << i << " ";
            write_doubles(out, s.influences[i].w);
        }
    }
    out << "end\n";
}

Model read_model(std::istream& in) {
    expect(in, "tnrd-model");
    int version;
    if (!(in >> version) || version != kFormatVersion)
        throw std::runtime_error("model: unsupported format version");

    Model m;
    expect(in, "problem");
    std::string task;
    in >> task;
    if (task == "denoise") {
        double sigma;
        in >> sigma;
        m.problem = ProblemKind::make_denoise(sigma);
    } else if (task == "sisr") {
        int factor;
        in >> factor;
        m.problem = ProblemKind::make_sisr(factor);
    } else if (task == "deblock") {
        int quality;
        in >> quality;
        m.problem = ProblemKind::make_deblock(quality);
    } else {
        throw std::runtime_error("model: unknown problem kind '" + task + "'");
    }

    int stages;
    expect(in, "stages");
    in >> stages;
    expect(in, "kernel");
    in >> m.kernel_size;
    expect(in, "filters");
    in >> m.filter_count;
    expect(in, "rbf");
    std::string kind;
    in >> kind;
    if (kind == "gaussian")
        m.rbf.kind = RbfKind::gaussian;
    else if (kind == "triangular")
        m.rbf.kind = RbfKind::triangular;
    else
        throw std::runtime_error("model: unknown rbf kind '" + kind + "'");
    in >> m.rbf.center_min >> m.rbf.center_step >> m.rbf.center_count >> m.rbf.gamma;
    expect(in, "pad");
    in >> m.pad_border;
    if (!in) throw std::runtime_error("model: malformed header");
    if (stages < 1) throw std::runtime_error("model: bad stage count");

    m.basis = build_dct_basis(m.kernel_size);
    const size_t omega_dim = m.basis.atoms.size();
    m.stages.resize(stages);
    for (int t = 0; t < stages; ++t) {
        expect(in, "stage");
        int idx;
        in >> idx;
        if (idx != t) throw std::runtime_error("model: stage index out of order");
        StageParams& s = m.stages[t];
        expect(in, "lambda_raw");
        if (!(in >> s.lambda_raw)) throw std::runtime_error("model: truncated lambda");
        s.filters.resize(m.filter_count);
        s.influences.resize(m.filter_count);
        for (int i = 0; i < m.filter_count; ++i) {
            expect(in, "omega");
            in >> idx;
            s.filters[i].omega = read_doubles(in, omega_dim, "omega");
        }
        for (int i = 0; i < m.filter_count; ++i) {
            expect(in, "w");
            in >> idx;
            s.influences[i].w = read_doubles(in, m.rbf.center_count, "w");
        }
    }
    expect(in, "end");
    m.validate();
    return m;
}

void save_model(const Model& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("model: cannot write " + path);
    write_model(m, out);
    if (!out) throw std::runtime_error("model: write failed for " + path);
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("model: cannot open " + path);
    return read_model(in);
}

}  // namespace tnrd
