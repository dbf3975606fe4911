// Optional dataset acquisition: HTTP(S) download via libcurl plus a minimal
// .zip extractor (stored and deflate entries) on top of zlib.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "har/dataset.hpp"
#include "har/errors.hpp"

#ifdef HAR_HAVE_CURL
#include <curl/curl.h>
#endif
#ifdef HAR_HAVE_ZLIB
#include <zlib.h>
#endif

namespace fs = std::filesystem;

namespace har {

namespace {

#ifdef HAR_HAVE_ZLIB

std::uint16_t rd16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t rd32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<unsigned char> inflate_raw(const unsigned char* src, std::size_t src_len,
                                       std::size_t out_len) {
    std::vector<unsigned char> out(out_len);
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK)
        throw AcquisitionError("zip: inflateInit2 failed");
    zs.next_in = const_cast<unsigned char*>(src);
    zs.avail_in = static_cast<uInt>(src_len);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != out_len)
        throw AcquisitionError("zip: deflate stream corrupt");
    return out;
}

struct ZipEntry {
    std::string name;
    std::uint16_t method;
    std::uint32_t compressed_size;
    std::uint32_t uncompressed_size;
    std::uint32_t local_offset;
};

std::vector<ZipEntry> read_central_directory(const std::vector<unsigned char>& zip) {
    constexpr std::uint32_t kEocdSig = 0x06054b50;
    constexpr std::uint32_t kCdSig = 0x02014b50;
    if (zip.size() < 22) throw AcquisitionError("zip: file too small");

    // EOCD is within the last 22 + 65535 bytes.
    std::size_t scan_start = zip.size() > 22 + 65535 ? zip.size() - 22 - 65535 : 0;
    std::size_t eocd = std::string::npos;
    for (std::size_t i = zip.size() - 22 + 1; i-- > scan_start;) {
        if (rd32(&zip[i]) == kEocdSig) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos) throw AcquisitionError("zip: end-of-central-directory not found");

    std::uint16_t n_entries = rd16(&zip[eocd + 10]);
    std::uint32_t cd_offset = rd32(&zip[eocd + 16]);

    std::vector<ZipEntry> entries;
    std::size_t pos = cd_offset;
    for (std::uint16_t k = 0; k < n_entries; ++k) {
        if (pos + 46 > zip.size() || rd32(&zip[pos]) != kCdSig)
            throw AcquisitionError("zip: central directory corrupt");
        ZipEntry e;
        e.method = rd16(&zip[pos + 10]);
        e.compressed_size = rd32(&zip[pos + 20]);
        e.uncompressed_size = rd32(&zip[pos + 24]);
        std::uint16_t name_len = rd16(&zip[pos + 28]);
        std::uint16_t extra_len = rd16(&zip[pos + 30]);
        std::uint16_t comment_len = rd16(&zip[pos + 32]);
        e.local_offset = rd32(&zip[pos + 42]);
        e.name.assign(reinterpret_cast<const char*>(&zip[pos + 46]), name_len);
        entries.push_back(std::move(e));
        pos += 46u + name_len + extra_len + comment_len;
    }
    return entries;
}

std::vector<unsigned char> entry_data(const std::vector<unsigned char>& zip, const ZipEntry& e) {
    constexpr std::uint32_t kLocalSig = 0x04034b50;
    std::size_t pos = e.local_offset;
    if (pos + 30 > zip.size() || rd32(&zip[pos]) != kLocalSig)
        throw AcquisitionError("zip: local header corrupt for " + e.name);
    std::uint16_t name_len = rd16(&zip[pos + 26]);
    std::uint16_t extra_len = rd16(&zip[pos + 28]);
    std::size_t data_pos = pos + 30 + name_len + extra_len;
    if (data_pos + e.compressed_size > zip.size())
        throw AcquisitionError("zip: entry data truncated for " + e.name);

    if (e.method == 0) {
        if (e.compressed_size != e.uncompressed_size)
            throw AcquisitionError("zip: stored entry size mismatch for " + e.name);
        return {zip.begin() + static_cast<std::ptrdiff_t>(data_pos),
                zip.begin() + static_cast<std::ptrdiff_t>(data_pos + e.compressed_size)};
    }
    if (e.method == 8) return inflate_raw(&zip[data_pos], e.compressed_size, e.uncompressed_size);
    throw AcquisitionError("zip: unsupported compression method " + std::to_string(e.method) +
                           " for " + e.name);
}

void extract_zip_bytes(const std::vector<unsigned char>& zip, const fs::path& dest, int depth) {
    if (depth > 2) throw AcquisitionError("zip: nesting too deep");
    std::vector<fs::path> nested;
    for (const ZipEntry& e : read_central_directory(zip)) {
        if (e.name.empty() || e.name.find("..") != std::string::npos || e.name.front() == '/')
            throw AcquisitionError("zip: refusing suspicious entry name '" + e.name + "'");
        fs::path target = dest / e.name;
        if (e.name.back() == '/') {
            fs::create_directories(target);
            continue;
        }
        fs::create_directories(target.parent_path());
        auto data = entry_data(zip, e);
        std::ofstream out(target, std::ios::binary);
        if (!out) throw AcquisitionError("zip: cannot write " + target.string());
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
        if (target.extension() == ".zip") nested.push_back(target);
    }
    for (const fs::path& z : nested) {
        std::ifstream in(z, std::ios::binary);
        std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
        extract_zip_bytes(bytes, z.parent_path(), depth + 1);
    }
}

#endif  // HAR_HAVE_ZLIB

#ifdef HAR_HAVE_CURL
std::size_t curl_sink(char* ptr, std::size_t size, std::size_t nmemb, void* userdata) {
    auto* out = static_cast<std::ofstream*>(userdata);
    out->write(ptr, static_cast<std::streamsize>(size * nmemb));
    return size * nmemb;
}
#endif

}  // namespace

void unzip_archive(const fs::path& zip_path, const fs::path& dest_dir) {
#ifdef HAR_HAVE_ZLIB
    std::ifstream in(zip_path, std::ios::binary);
    if (!in) throw AcquisitionError("missing archive: " + zip_path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    fs::create_directories(dest_dir);
    extract_zip_bytes(bytes, dest_dir, 0);
#else
    (void)zip_path;
    (void)dest_dir;
    throw AcquisitionError("unzip_archive: built without zlib");
#endif
}

void fetch_dataset(const std::string& url, const fs::path& dest_dir) {
#ifdef HAR_HAVE_CURL
    fs::create_directories(dest_dir);
    fs::path zip_path = dest_dir / "download.zip";
    {
        std::ofstream out(zip_path, std::ios::binary);
        if (!out) throw AcquisitionError("cannot write " + zip_path.string());

        CURL* curl = curl_easy_init();
        if (!curl) throw AcquisitionError("libcurl init failed");
        curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
        curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
        curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, curl_sink);
        curl_easy_setopt(curl, CURLOPT_WRITEDATA, &out);
        curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
        CURLcode rc = curl_easy_perform(curl);
        long http_code = 0;
        curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &http_code);
        curl_easy_cleanup(curl);
        if (rc != CURLE_OK)
            throw AcquisitionError(std::string("download failed: ") + curl_easy_strerror(rc));
        if (http_code != 200 && http_code != 0)
            throw AcquisitionError("download failed: HTTP " + std::to_string(http_code));
    }
    unzip_archive(zip_path, dest_dir);
#else
    (void)url;
    (void)dest_dir;
    throw AcquisitionError("fetch_dataset: built without libcurl");
#endif
}

}  // namespace har
