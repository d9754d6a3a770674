#include "gsc/ply.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "gsc/errors.h"

namespace gsc {

namespace {

double logit(double p) {
  const double clamped = std::clamp(p, 1e-6, 1.0 - 1e-6);
  return std::log(clamped / (1.0 - clamped));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void writePly(const GaussianCloud& cloud, const std::string& path) {
  const size_t n = cloud.size();
  const int shCount = shCoefficientCount(cloud.shDegree);
  const int restCount = shCount - 3;

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << n << "\n";
  const char* baseProps[] = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (const char* prop : baseProps) {
    out << "property float " << prop << "\n";
  }
  for (int i = 0; i < restCount; ++i) {
    out << "property float f_rest_" << i << "\n";
  }
  out << "property float opacity\n";
  for (int i = 0; i < 3; ++i) out << "property float scale_" << i << "\n";
  for (int i = 0; i < 4; ++i) out << "property float rot_" << i << "\n";
  out << "end_header\n";

  std::vector<float> row(9 + restCount + 1 + 3 + 4);
  for (size_t i = 0; i < n; ++i) {
    size_t k = 0;
    row[k++] = static_cast<float>(cloud.positions[i].x);
    row[k++] = static_cast<float>(cloud.positions[i].y);
    row[k++] = static_cast<float>(cloud.positions[i].z);
    row[k++] = 0.0f;
    row[k++] = 0.0f;
    row[k++] = 0.0f;
    for (int a = 0; a < shCount; ++a) {
      row[k++] = static_cast<float>(cloud.sh[i * shCount + a]);
    }
    row[k++] = static_cast<float>(logit(cloud.opacities[i]));
    for (int a = 0; a < 3; ++a) {
      row[k++] = static_cast<float>(std::log(std::max(cloud.scales[i * 3 + a], 1e-12)));
    }
    for (int a = 0; a < 4; ++a) {
      row[k++] = static_cast<float>(cloud.rotations[i * 4 + a]);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

GaussianCloud readPly(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line != "ply") {
    throw FormatError("not a PLY file: " + path);
  }
  size_t vertexCount = 0;
  std::vector<std::string> propertyNames;
  bool binaryLE = false;
  bool inVertexElement = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    if (token == "format") {
      std::string fmt;
      ss >> fmt;
      binaryLE = fmt == "binary_little_endian";
    } else if (token == "element") {
      std::string name;
      ss >> name >> vertexCount;
      inVertexElement = name == "vertex";
      if (!inVertexElement) {
        throw FormatError("unsupported PLY element: " + name);
      }
    } else if (token == "property" && inVertexElement) {
      std::string type, name;
      ss >> type >> name;
      if (type != "float") {
        throw FormatError("unsupported PLY property type: " + type);
      }
      propertyNames.push_back(name);
    } else if (token == "end_header") {
      break;
    }
  }
  if (!binaryLE) {
    throw FormatError("only binary little-endian PLY is supported");
  }

  std::map<std::string, size_t> index;
  for (size_t i = 0; i < propertyNames.size(); ++i) {
    index[propertyNames[i]] = i;
  }
  for (const char* required : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
                               "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2",
                               "rot_3"}) {
    if (index.find(required) == index.end()) {
      throw FormatError(std::string("PLY missing property: ") + required);
    }
  }
  int restCount = 0;
  while (index.count("f_rest_" + std::to_string(restCount)) > 0) {
    ++restCount;
  }
  int degree = 0;
  while (3 * (degree + 1) * (degree + 1) - 3 < restCount) {
    ++degree;
  }
  if (3 * (degree + 1) * (degree + 1) - 3 != restCount) {
    throw FormatError("PLY f_rest count does not match any SH degree");
  }

  GaussianCloud cloud;
  cloud.shDegree = degree;
  cloud.resize(vertexCount);
  const int shCount = shCoefficientCount(degree);
  const size_t stride = propertyNames.size();
  std::vector<float> row(stride);
  for (size_t i = 0; i < vertexCount; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(stride * sizeof(float)));
    if (!in) {
      throw FormatError("PLY vertex data truncated at point " + std::to_string(i));
    }
    cloud.positions[i] = {row[index["x"]], row[index["y"]], row[index["z"]]};
    for (int a = 0; a < 3; ++a) {
      cloud.sh[i * shCount + a] = row[index["f_dc_" + std::to_string(a)]];
    }
    for (int a = 0; a < restCount; ++a) {
      cloud.sh[i * shCount + 3 + a] = row[index["f_rest_" + std::to_string(a)]];
    }
    cloud.opacities[i] = sigmoid(row[index["opacity"]]);
    for (int a = 0; a < 3; ++a) {
      cloud.scales[i * 3 + a] = std::exp(row[index["scale_" + std::to_string(a)]]);
    }
    for (int a = 0; a < 4; ++a) {
      cloud.rotations[i * 4 + a] = row[index["rot_" + std::to_string(a)]];
    }
  }
  return cloud;
}

}  // namespace gsc
