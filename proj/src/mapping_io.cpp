#include "zdam/mapping_io.hpp"

#include "json.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <vector>

namespace zdam {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(r);
    }
    return rows;
}

Eigen::VectorXd to_vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd to_mat(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto r = j.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(r.size()) != cols) throw std::runtime_error("ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)];
    }
    return m;
}

json encoder_json(const Eigen::VectorXd& x, const GridEncoder& enc,
                  const std::optional<RandomizedEncoder>& model) {
    json e;
    e["x"] = vec(x);
    e["g"] = vec(enc.values);
    if (model) {
        json models = json::array();
        for (const AffineModel& m : model->models) models.push_back({{"a", m.a}, {"b", m.b}});
        e["models"] = models;
        e["associations"] = mat(model->assoc);
    }
    return e;
}

void read_encoder(const json& e, Eigen::VectorXd& x, GridEncoder& enc,
                  std::optional<RandomizedEncoder>& model) {
    x = to_vec(e.at("x"));
    enc.values = to_vec(e.at("g"));
    if (e.contains("models")) {
        RandomizedEncoder r;
        for (const json& m : e.at("models")) {
            r.models.push_back({m.at("a").get<double>(), m.at("b").get<double>()});
        }
        r.assoc = to_mat(e.at("associations"));
        model = std::move(r);
    }
}

}  // namespace

void dump_mapping(const MappingState& s, const std::string& path) {
    json j;
    j["encoder1"] = encoder_json(s.x_grid_1, s.enc1, s.model1);
    j["encoder2"] = encoder_json(s.x_grid_2, s.enc2, s.model2);
    j["decoder"] = {{"y1", vec(s.decoder.grid.y_grid_1)},
                    {"y2", vec(s.decoder.grid.y_grid_2)},
                    {"widened", s.decoder.grid.widened},
                    {"filled_nodes", s.decoder.filled_nodes},
                    {"xhat1", mat(s.decoder.xhat1)},
                    {"xhat2", mat(s.decoder.xhat2)}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write mapping file '" + path + "'");
    out << j.dump(1) << "\n";
    if (!out) throw std::runtime_error("error while writing mapping file '" + path + "'");
}

void dump_mapping_csv(const MappingState& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write mapping CSV '" + path + "'");
    out << std::setprecision(17) << "x1,g1,x2,g2\n";
    const Eigen::Index n = std::max(s.x_grid_1.size(), s.x_grid_2.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i < s.x_grid_1.size()) out << s.x_grid_1(i) << "," << s.enc1.values(i);
        else out << ",";
        out << ",";
        if (i < s.x_grid_2.size()) out << s.x_grid_2(i) << "," << s.enc2.values(i);
        else out << ",";
        out << "\n";
    }
    if (!out) throw std::runtime_error("error while writing mapping CSV '" + path + "'");
}

MappingState load_mapping(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mapping file '" + path + "'");
    MappingState s;
    try {
        const json j = json::parse(in);
        read_encoder(j.at("encoder1"), s.x_grid_1, s.enc1, s.model1);
        read_encoder(j.at("encoder2"), s.x_grid_2, s.enc2, s.model2);
        const json& d = j.at("decoder");
        s.decoder.grid.y_grid_1 = to_vec(d.at("y1"));
        s.decoder.grid.y_grid_2 = to_vec(d.at("y2"));
        s.decoder.grid.widened = d.at("widened").get<bool>();
        s.decoder.filled_nodes = d.at("filled_nodes").get<std::size_t>();
        s.decoder.xhat1 = to_mat(d.at("xhat1"));
        s.decoder.xhat2 = to_mat(d.at("xhat2"));
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed mapping file '" + path + "': " + e.what());
    }
    return s;
}

}  // namespace zdam
