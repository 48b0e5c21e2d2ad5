#include "diiq/metrics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace diiq {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

}  // namespace

std::string provenance_line(std::uint64_t config_hash, std::uint64_t seed) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "# config_hash=%016llx seed=%llu",
                  static_cast<unsigned long long>(config_hash),
                  static_cast<unsigned long long>(seed));
    return buf;
}

std::string MetricsLog::episodes_csv(const std::string& provenance) const {
    std::ostringstream out;
    if (!provenance.empty()) out << provenance << "\n";
    out << "step,episode,return,normalized_return\n";
    for (const auto& r : episodes)
        out << r.step << "," << r.episode << "," << fmt(r.episode_return) << ","
            << fmt(r.normalized_return) << "\n";
    return out.str();
}

std::string MetricsLog::intervals_csv(const std::string& provenance) const {
    std::ostringstream out;
    if (!provenance.empty()) out << provenance << "\n";
    out << "step,mean_phi,mean_err,infeasible_fraction,bridge_count,mean_bridge_length,mean_loss\n";
    for (const auto& r : intervals)
        out << r.step << "," << fmt(r.mean_phi) << "," << fmt(r.mean_err) << ","
            << fmt(r.infeasible_fraction) << "," << r.bridge_count << ","
            << fmt(r.mean_bridge_length) << "," << fmt(r.mean_loss) << "\n";
    return out.str();
}

std::string MetricsLog::evals_csv(const std::string& provenance) const {
    std::ostringstream out;
    if (!provenance.empty()) out << provenance << "\n";
    out << "step,mean_return,mean_normalized_return,std_return\n";
    for (const auto& r : evals)
        out << r.step << "," << fmt(r.mean_return) << "," << fmt(r.mean_normalized_return) << ","
            << fmt(r.std_return) << "\n";
    return out.str();
}

void MetricsLog::write_files(const std::string& out_dir, const std::string& provenance) const {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir + "/episodes.csv", episodes_csv(provenance));
    write_text(out_dir + "/intervals.csv", intervals_csv(provenance));
    write_text(out_dir + "/evals.csv", evals_csv(provenance));
}

std::string strip_comments(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out << line << "\n";
    return out.str();
}

}  // namespace diiq
