#include "tucker/tns_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

namespace tucker {

static_assert(std::endian::native == std::endian::little, "TNS1 I/O assumes a little-endian host");

void write_tns(std::ostream& out, const DenseTensor& t) {
  nlohmann::ordered_json header;
  header["dims"] = t.dims();
  header["dtype"] = "f64";
  header["layout"] = "row-major";
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * static_cast<Index>(sizeof(double))));
  if (!out) throw IoError("failed writing tensor data");
}

DenseTensor read_tns(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("missing TNS1 header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed TNS1 header: ") + e.what());
  }
  if (!header.is_object() || !header.contains("dims") || !header["dims"].is_array())
    throw IoError("TNS1 header lacks a dims array");
  if (header.value("dtype", std::string()) != "f64") throw IoError("TNS1 dtype must be f64");
  if (header.value("layout", std::string()) != "row-major") throw IoError("unrecognised TNS1 layout");
  Dims dims;
  for (const auto& v : header["dims"]) {
    if (!v.is_number_integer() || v.get<long long>() < 1) throw IoError("TNS1 dims must be positive integers");
    dims.push_back(static_cast<Index>(v.get<long long>()));
  }
  if (dims.empty()) throw IoError("TNS1 dims must be nonempty");

  const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto expected = static_cast<std::size_t>(product(dims)) * sizeof(double);
  if (payload.size() != expected)
    throw IoError("TNS1 payload has " + std::to_string(payload.size()) + " bytes, expected " +
                  std::to_string(expected));
  std::vector<double> values(static_cast<std::size_t>(product(dims)));
  std::memcpy(values.data(), payload.data(), expected);
  return DenseTensor(std::move(dims), std::move(values));
}

void write_tns(const std::filesystem::path& path, const DenseTensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_tns(out, t);
}

DenseTensor read_tns(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_tns(in);
}

}  // namespace tucker
