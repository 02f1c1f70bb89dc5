#include "explasso/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "explasso/noise.hpp"  // numeric_error / io_error
#include "explasso/rng.hpp"

namespace explasso::design {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    }
    return out;
}

double parse_cell(const std::string& cell, long row, long col) {
    double v = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw io_error("csv parse error at row " + std::to_string(row) + ", column " +
                       std::to_string(col) + ": '" + cell + "' is not numeric");
    if (!std::isfinite(v))
        throw io_error("csv parse error at row " + std::to_string(row) + ", column " +
                       std::to_string(col) + ": non-finite value");
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw io_error("'" + path + "': empty file");
    CsvTable table;
    table.header = split_csv_line(line);
    if (table.header.empty() || (table.header.size() == 1 && table.header[0].empty()))
        throw io_error("'" + path + "': missing header row");
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != table.header.size())
            throw io_error("csv parse error at row " + std::to_string(row) + ": expected " +
                           std::to_string(table.header.size()) + " cells, found " +
                           std::to_string(cells.size()));
        std::vector<double> vals(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            vals[c] = parse_cell(cells[c], row, long(c) + 1);
        table.rows.push_back(std::move(vals));
    }
    return table;
}

}  // namespace

long Dataset::n_penalized() const {
    long k = 0;
    for (char m : penalty_mask) k += (m != 0);
    return k;
}

std::vector<int> Dataset::penalized_indices() const {
    std::vector<int> idx;
    for (std::size_t j = 0; j < penalty_mask.size(); ++j)
        if (penalty_mask[j]) idx.push_back(int(j));
    return idx;
}

void Dataset::validate() const {
    if (n() < 2) throw std::invalid_argument("dataset: need n >= 2");
    if (p() < 1) throw std::invalid_argument("dataset: need p >= 1");
    if (X.rows() != y.size()) throw std::invalid_argument("dataset: X rows != y length");
    if (long(penalty_mask.size()) != p())
        throw std::invalid_argument("dataset: penalty mask length != p");
    if (!y.allFinite() || !X.allFinite())
        throw std::invalid_argument("dataset: non-finite entries");
    if (centered) {
        for (long j = 0; j < p(); ++j) {
            if (!penalty_mask[j]) continue;
            const double scale = X.col(j).cwiseAbs().maxCoeff();
            if (std::abs(X.col(j).mean()) > 1e-10 * std::max(scale, 1.0))
                throw std::invalid_argument("dataset: marked centered but column " +
                                            std::to_string(j) + " has nonzero mean");
        }
    }
}

Dataset load_csv(const std::string& path) {
    CsvTable table = read_csv_table(path);
    long y_col = -1;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c] == "y") {
            if (y_col >= 0) throw io_error("'" + path + "': multiple 'y' columns");
            y_col = long(c);
        }
    }
    if (y_col < 0) throw io_error("'" + path + "': no column named 'y'");
    const long n = long(table.rows.size());
    if (n < 2) throw io_error("'" + path + "': need at least 2 data rows, found " +
                              std::to_string(n));
    const long p = long(table.header.size()) - 1;
    Dataset ds;
    ds.y.resize(n);
    ds.X.resize(n, p);
    for (long i = 0; i < n; ++i) {
        long k = 0;
        for (long c = 0; c < long(table.header.size()); ++c) {
            if (c == y_col)
                ds.y[i] = table.rows[i][c];
            else
                ds.X(i, k++) = table.rows[i][c];
        }
    }
    ds.penalty_mask.assign(p, 1);
    return ds;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
    CsvTable table = read_csv_table(path);
    long y_col = -1;
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (table.header[c] == "y") y_col = long(c);
    const long n = long(table.rows.size());
    if (n < 1) throw io_error("'" + path + "': no data rows");
    const long p = long(table.header.size()) - (y_col >= 0 ? 1 : 0);
    Eigen::MatrixXd X(n, p);
    for (long i = 0; i < n; ++i) {
        long k = 0;
        for (long c = 0; c < long(table.header.size()); ++c) {
            if (c == y_col) continue;
            X(i, k++) = table.rows[i][c];
        }
    }
    return X;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& col_names) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    for (long c = 0; c < m.cols(); ++c) {
        if (c) out << ',';
        out << (c < long(col_names.size()) ? col_names[c] : "c" + std::to_string(c));
    }
    out << '\n';
    char buf[32];
    for (long i = 0; i < m.rows(); ++i) {
        for (long c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, c));
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw io_error("short write to '" + path + "'");
}

Dataset with_intercept(const Dataset& ds) {
    const long n = ds.n();
    const long p = ds.p();
    Dataset out;
    out.y = ds.y;
    out.X.resize(n, p + 1);
    out.X.col(0).setOnes();
    out.penalty_mask.assign(p + 1, 1);
    out.penalty_mask[0] = 0;
    out.column_means = Eigen::VectorXd::Zero(p + 1);
    for (long j = 0; j < p; ++j) {
        const bool pen = ds.penalty_mask[j] != 0;
        out.penalty_mask[j + 1] = pen ? 1 : 0;
        if (pen) {
            const double mean = ds.X.col(j).mean();
            out.X.col(j + 1) = ds.X.col(j).array() - mean;
            out.column_means[j + 1] = mean;
        } else {
            out.X.col(j + 1) = ds.X.col(j);
        }
    }
    out.centered = true;
    out.has_intercept = true;
    return out;
}

Eigen::MatrixXd gram(const Dataset& ds) {
    const long p = ds.p();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
    g.selfadjointView<Eigen::Lower>().rankUpdate(ds.X.transpose(), 1.0 / double(ds.n()));
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

double irrepresentable_eta0(const Dataset& ds, const std::vector<int>& S, double* cond) {
    const long p = ds.p();
    std::vector<char> in_s(p, 0);
    for (int j : S) {
        if (j < 0 || j >= p) throw std::invalid_argument("irrepresentable_eta0: index out of range");
        if (in_s[j]) throw std::invalid_argument("irrepresentable_eta0: duplicate index in S");
        in_s[j] = 1;
    }
    const long s = long(S.size());
    if (s == 0) return 0.0;

    Eigen::MatrixXd Xs(ds.n(), s);
    for (long k = 0; k < s; ++k) Xs.col(k) = ds.X.col(S[k]);
    Eigen::MatrixXd G = Xs.transpose() * Xs;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    const double emin = eig.eigenvalues().minCoeff();
    const double emax = eig.eigenvalues().maxCoeff();
    if (emin <= emax * 1e-12 || emin <= 0)
        throw numeric_error("irrepresentable_eta0: X_S^T X_S is singular (min eigenvalue " +
                            std::to_string(emin) + ")");
    if (cond) *cond = emax / emin;

    // A = X_{-S}^T X_S (X_S^T X_S)^{-1}; eta0 = max row l1 norm of A.
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    double eta0 = 0.0;
    Eigen::VectorXd a(s);
    for (long j = 0; j < p; ++j) {
        if (in_s[j]) continue;
        a = llt.solve(Xs.transpose() * ds.X.col(j));
        eta0 = std::max(eta0, a.lpNorm<1>());
    }
    return eta0;
}

double restricted_eigenvalue_proxy(const Dataset& ds, const std::vector<int>& S,
                                   double eta, long n_random, std::uint64_t seed) {
    if (!(eta > 0.0) || eta > 1.0)
        throw std::invalid_argument("restricted_eigenvalue_proxy: need 0 < eta <= 1");
    if (n_random < 1)
        throw std::invalid_argument("restricted_eigenvalue_proxy: need n_random >= 1");
    const long p = ds.p();
    const Eigen::MatrixXd G = gram(ds);
    if (S.empty()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
        return eig.eigenvalues().minCoeff();
    }
    std::vector<char> in_s(p, 0);
    for (int j : S) {
        if (j < 0 || j >= p)
            throw std::invalid_argument("restricted_eigenvalue_proxy: index out of range");
        in_s[j] = 1;
    }
    std::vector<int> comp;
    for (long j = 0; j < p; ++j)
        if (!in_s[j]) comp.push_back(int(j));

    auto rng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double cone = 9.0 / eta;  // ||b||_1 <= (9/eta) ||b_S||_1

    Eigen::VectorXd b(p);
    double best = std::numeric_limits<double>::infinity();
    auto record = [&](const Eigen::VectorXd& v) {
        const double nrm2 = v.squaredNorm();
        if (nrm2 <= 0) return;
        best = std::min(best, v.dot(G * v) / nrm2);
    };
    for (long k = 0; k < n_random; ++k) {
        b.setZero();
        double l1_s = 0.0;
        for (int j : S) {
            b[j] = normal(rng);
            l1_s += std::abs(b[j]);
        }
        if (comp.empty()) {
            record(b);
            continue;
        }
        Eigen::VectorXd u(long(comp.size()));
        for (long t = 0; t < u.size(); ++t) u[t] = normal(rng);
        const double room = (cone - 1.0) * l1_s;  // l1 budget left for b_{-S}
        const double u1 = u.lpNorm<1>();
        // boundary direction
        if (u1 > 0) {
            for (std::size_t t = 0; t < comp.size(); ++t) b[comp[t]] = u[long(t)] * room / u1;
            record(b);
            // interior point on the same ray
            const double w = unif(rng);
            for (std::size_t t = 0; t < comp.size(); ++t) b[comp[t]] *= w;
            record(b);
        }
        // sparse-only direction
        for (int j : comp) b[j] = 0.0;
        record(b);
    }
    return best;
}

Eigen::MatrixXd generate_gaussian_design(long n, long p, std::mt19937_64& rng) {
    if (n < 1 || p < 1) throw std::invalid_argument("generate_gaussian_design: n, p >= 1");
    Eigen::MatrixXd X(n, p);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) X(i, j) = normal(rng);
    return X;
}

DesignDiagnostics diagnose(const Dataset& ds, const std::vector<int>* S,
                           const Eigen::MatrixXd* sigma_ref) {
    DesignDiagnostics d;
    d.k_x = ds.X.cwiseAbs().maxCoeff();
    double min_norm = std::numeric_limits<double>::infinity();
    for (long j = 0; j < ds.p(); ++j) {
        if (!ds.penalty_mask[j]) continue;
        min_norm = std::min(min_norm, ds.X.col(j).squaredNorm() / double(ds.n()));
    }
    d.min_col_norm_sq = std::isfinite(min_norm) ? min_norm : 0.0;
    if (sigma_ref) {
        const Eigen::MatrixXd g = gram(ds);
        if (sigma_ref->rows() != g.rows() || sigma_ref->cols() != g.cols())
            throw std::invalid_argument("diagnose: reference Sigma has wrong shape");
        d.gram_deviation = (g - *sigma_ref).cwiseAbs().maxCoeff();
    }
    if (S) {
        double cond = 0;
        d.irrepresentable_eta0 = irrepresentable_eta0(ds, *S, &cond);
        d.cond_s = cond;
    }
    return d;
}

}  // namespace explasso::design
