#include "nnsos/sdpa_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nnsos/poly.hpp"
#include "nnsos/polyparse.hpp"

namespace nnsos {

namespace {

struct SdpaEntry {
  int mat, blk, i, j;  // 1-based per the format
  double v;
};

void collect(const SdpProblem& prob, int mat_no,
             const std::vector<SdpTerm>& mats, const std::vector<FreeTerm>& lins,
             int lp_block, std::vector<SdpaEntry>& out) {
  for (auto& t : mats) {
    double v = (t.i == t.j) ? t.coef : 0.5 * t.coef;
    out.push_back({mat_no, t.block + 1, t.i + 1, t.j + 1, v});
  }
  for (auto& t : lins) {
    out.push_back({mat_no, lp_block, 2 * t.var + 1, 2 * t.var + 1, t.coef});
    out.push_back({mat_no, lp_block, 2 * t.var + 2, 2 * t.var + 2, -t.coef});
  }
  (void)prob;
}

}  // namespace

std::string sdpa_text(const SdpProblem& prob) {
  std::ostringstream os;
  int m = static_cast<int>(prob.rows.size());
  bool lp = prob.num_free > 0;
  int nblocks = static_cast<int>(prob.block_dims.size()) + (lp ? 1 : 0);
  os << "\"SOS certification export\"\n";
  os << m << " = mDIM\n";
  os << nblocks << " = nBLOCK\n";
  for (std::size_t k = 0; k < prob.block_dims.size(); ++k) {
    os << prob.block_dims[k];
    os << (k + 1 < prob.block_dims.size() || lp ? " " : "");
  }
  if (lp) os << -(2 * prob.num_free);
  os << "\n";
  for (int r = 0; r < m; ++r)
    os << format_double(prob.rows[r].rhs) << (r + 1 < m ? " " : "");
  os << "\n";
  int lp_block = static_cast<int>(prob.block_dims.size()) + 1;
  std::vector<SdpaEntry> entries;
  collect(prob, 0, prob.obj_mat, prob.obj_lin, lp_block, entries);
  for (int r = 0; r < m; ++r)
    collect(prob, r + 1, prob.rows[r].mat, prob.rows[r].lin, lp_block, entries);
  for (auto& e : entries)
    os << e.mat << " " << e.blk << " " << e.i << " " << e.j << " "
       << format_double(e.v) << "\n";
  return os.str();
}

void write_sdpa(const SdpProblem& prob, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write SDPA file: " + path);
  out << sdpa_text(prob);
}

SdpProblem parse_sdpa_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_data_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      std::size_t i = line.find_first_not_of(" \t\r");
      if (i == std::string::npos) continue;
      if (line[i] == '"' || line[i] == '*') continue;  // comments
      return line.substr(i);
    }
    throw Error("unexpected end of SDPA file");
  };
  auto strip = [](std::string s) {
    for (auto& c : s)
      if (c == ',' || c == '(' || c == ')' || c == '{' || c == '}') c = ' ';
    return s;
  };
  int m = std::stoi(next_data_line());
  int nblocks = std::stoi(next_data_line());
  std::istringstream bs(strip(next_data_line()));
  std::vector<int> raw_dims(nblocks);
  for (int k = 0; k < nblocks; ++k) {
    if (!(bs >> raw_dims[k])) throw Error("bad SDPA block structure line");
  }
  SdpProblem prob;
  // Map: PSD blocks keep their dim; diagonal blocks become runs of 1x1.
  struct BlockMap {
    bool diag;
    int first;  // first internal block index
    int size;
  };
  std::vector<BlockMap> bmap;
  for (int k = 0; k < nblocks; ++k) {
    if (raw_dims[k] >= 0) {
      bmap.push_back({false, static_cast<int>(prob.block_dims.size()), raw_dims[k]});
      prob.block_dims.push_back(raw_dims[k]);
    } else {
      int s = -raw_dims[k];
      bmap.push_back({true, static_cast<int>(prob.block_dims.size()), s});
      for (int i = 0; i < s; ++i) prob.block_dims.push_back(1);
    }
  }
  prob.rows.resize(m);
  {
    std::istringstream cs(strip(next_data_line()));
    for (int r = 0; r < m; ++r) {
      if (!(cs >> prob.rows[r].rhs)) throw Error("bad SDPA c vector");
    }
  }
  while (std::getline(in, line)) {
    std::size_t i = line.find_first_not_of(" \t\r");
    if (i == std::string::npos) continue;
    if (line[i] == '"' || line[i] == '*') continue;
    std::istringstream es(strip(line.substr(i)));
    int mat, blk, ei, ej;
    double v;
    if (!(es >> mat >> blk >> ei >> ej >> v)) continue;
    if (blk < 1 || blk > nblocks) throw Error("SDPA entry block out of range");
    const BlockMap& bm = bmap[blk - 1];
    SdpTerm t;
    if (bm.diag) {
      if (ei != ej) throw Error("off-diagonal entry in diagonal SDPA block");
      t = {bm.first + ei - 1, 0, 0, v};
    } else {
      int a = std::min(ei, ej) - 1, b = std::max(ei, ej) - 1;
      t = {bm.first, a, b, a == b ? v : 2.0 * v};
    }
    if (mat == 0) {
      prob.obj_mat.push_back(t);
    } else {
      if (mat < 1 || mat > m) throw Error("SDPA entry matrix index out of range");
      prob.rows[mat - 1].mat.push_back(t);
    }
  }
  return prob;
}

SdpProblem read_sdpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open SDPA file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sdpa_text(ss.str());
}

void write_solution_file(const SdpProblem& prob, const ConicSolution& sol,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write solution file: " + path);
  out << "* status " << to_string(sol.status) << "\n";
  out << "* objective " << format_double(sol.primal_obj) << "\n";
  for (std::size_t r = 0; r < sol.y.size(); ++r)
    out << format_double(sol.y[r]) << (r + 1 < sol.y.size() ? " " : "");
  out << "\n";
  for (std::size_t k = 0; k < sol.blocks.size(); ++k) {
    const Mat& B = sol.blocks[k];
    for (int i = 0; i < B.rows; ++i)
      for (int j = i; j < B.cols; ++j)
        out << "Y " << k + 1 << " " << i + 1 << " " << j + 1 << " "
            << format_double(B.at(i, j)) << "\n";
  }
  for (std::size_t v = 0; v < sol.free_vars.size(); ++v)
    out << "w " << v + 1 << " " << format_double(sol.free_vars[v]) << "\n";
  (void)prob;
}

ConicSolution read_solution_file(const SdpProblem& prob,
                                 const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open solution file: " + path);
  ConicSolution sol;
  sol.status = SolveStatus::Feasible;
  for (int d : prob.block_dims) sol.blocks.emplace_back(d, d);
  sol.free_vars.assign(static_cast<std::size_t>(prob.num_free), 0.0);
  std::string line;
  bool have_y = false;
  while (std::getline(in, line)) {
    std::size_t i = line.find_first_not_of(" \t\r");
    if (i == std::string::npos) continue;
    if (line[i] == '*') {
      if (line.find("status") != std::string::npos) {
        if (line.find("optimal") != std::string::npos)
          sol.status = SolveStatus::Optimal;
      }
      continue;
    }
    std::istringstream ls(line.substr(i));
    if (line[i] == 'Y') {
      char tag;
      int blk, ei, ej;
      double v;
      ls >> tag >> blk >> ei >> ej >> v;
      if (blk < 1 || blk > static_cast<int>(sol.blocks.size()))
        throw Error("solution entry block out of range");
      sol.blocks[blk - 1].at(ei - 1, ej - 1) = v;
      sol.blocks[blk - 1].at(ej - 1, ei - 1) = v;
    } else if (line[i] == 'w') {
      char tag;
      int idx;
      double v;
      ls >> tag >> idx >> v;
      if (idx < 1 || idx > prob.num_free)
        throw Error("solution free-variable index out of range");
      sol.free_vars[idx - 1] = v;
    } else if (!have_y) {
      double v;
      while (ls >> v) sol.y.push_back(v);
      have_y = true;
    }
  }
  // Recompute objective values from the imported point.
  double pobj = 0.0;
  for (auto& t : prob.obj_mat) pobj += t.coef * sol.blocks[t.block].at(t.i, t.j);
  for (auto& t : prob.obj_lin) pobj += t.coef * sol.free_vars[t.var];
  sol.primal_obj = pobj;
  sol.dual_obj = 0.0;
  for (std::size_t r = 0; r < sol.y.size() && r < prob.rows.size(); ++r)
    sol.dual_obj += prob.rows[r].rhs * sol.y[r];
  return sol;
}

}  // namespace nnsos
