"""WHOIS client, response parser, and an offline cache.

The client speaks the plain TCP port-43 protocol. Server routing is a
static TLD map with an IANA referral fallback (followed at most once);
per-server queries are serialized and spaced out by a rate limiter so
bulk runs stay polite.  Responses are cached verbatim in a JSON-lines
file so later pipeline stages can run fully offline.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import re
import socket
import threading
import time
from dataclasses import dataclass

from domaintriage.features import RegistrarLists, canonicalize_registrar
from domaintriage.model import Domain, DomainTriageError, WhoisRecord

PROXY_ENV_VAR = "DOMAINTRIAGE_WHOIS_PROXY"

IANA_HOST = "whois.iana.org"
WHOIS_PORT = 43

# registry servers for the TLDs the default lists care about; anything
# else is resolved through IANA at query time
DEFAULT_SERVERS = {
    "com": "whois.verisign-grs.com",
    "net": "whois.verisign-grs.com",
    "org": "whois.publicinterestregistry.org",
    "info": "whois.nic.info",
    "xyz": "whois.nic.xyz",
    "ru": "whois.tcinet.ru",
    "uk": "whois.nic.uk",
    "fr": "whois.nic.fr",
    "it": "whois.nic.it",
    "live": "whois.nic.live",
    "buzz": "whois.nic.buzz",
    "top": "whois.nic.top",
    "work": "whois.nic.work",
    "fit": "whois.nic.fit",
    "rest": "whois.nic.rest",
    "wang": "whois.gtld.knet.cn",
    "tk": "whois.dot.tk",
    "gq": "whois.domino.gq",
    "cf": "whois.dot.cf",
    "ml": "whois.nic.ml",
}


class WhoisError(DomainTriageError):
    """Base class for WHOIS client failures."""


class WhoisTimeout(WhoisError):
    """The server did not answer within the configured timeout."""


class WhoisConnectionRefused(WhoisError):
    """The server (or proxy) could not be reached."""


class NoServerForTld(WhoisError):
    """No configured server and no IANA referral for the TLD."""


class RateLimited(WhoisError):
    """The server said we are querying too fast."""


_RATE_LIMIT_SIGNALS = (
    "rate limit",
    "too many requests",
    "quota exceeded",
    "lookup quota",
    "exceeded the maximum",
    "try again later",
)


class _RateLimiter:
    """Serializes access per server and enforces a minimum spacing
    between consecutive queries to the same server."""

    def __init__(self, min_interval: float):
        self.min_interval = min_interval
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}

    def lock_for(self, server: str) -> threading.Lock:
        with self._guard:
            if server not in self._locks:
                self._locks[server] = threading.Lock()
            return self._locks[server]

    def wait(self, server: str) -> None:
        # caller must hold lock_for(server)
        last = self._last.get(server)
        if last is not None:
            remaining = self.min_interval - (time.monotonic() - last)
            if remaining > 0:
                time.sleep(remaining)

    def mark(self, server: str) -> None:
        self._last[server] = time.monotonic()


def _parse_proxy(value: str) -> tuple[str, str, int]:
    m = re.match(r"^(socks5|http)://([^:/]+):(\d+)/?$", value.strip())
    if not m:
        raise ValueError(
            f"proxy must look like socks5://host:port or http://host:port, got {value!r}"
        )
    return m.group(1), m.group(2), int(m.group(3))


def _connect_direct(host: str, port: int, timeout: float) -> socket.socket:
    return socket.create_connection((host, port), timeout=timeout)


def _connect_via_http(proxy_host: str, proxy_port: int, host: str, port: int,
                      timeout: float) -> socket.socket:
    sock = socket.create_connection((proxy_host, proxy_port), timeout=timeout)
    try:
        req = f"CONNECT {host}:{port} HTTP/1.1\r\nHost: {host}:{port}\r\n\r\n"
        sock.sendall(req.encode("ascii"))
        reply = b""
        while b"\r\n\r\n" not in reply:
            chunk = sock.recv(1024)
            if not chunk:
                break
            reply = reply + chunk
        status = reply.split(b"\r\n", 1)[0]
        if b" 200" not in status:
            raise WhoisConnectionRefused(
                f"proxy refused CONNECT to {host}:{port}: {status.decode('ascii', 'replace')}"
            )
        return sock
    except Exception:
        sock.close()
        raise


def _connect_via_socks5(proxy_host: str, proxy_port: int, host: str, port: int,
                        timeout: float) -> socket.socket:
    sock = socket.create_connection((proxy_host, proxy_port), timeout=timeout)
    try:
        sock.sendall(b"\x05\x01\x00")  # version 5, one method: no auth
        reply = sock.recv(2)
        if reply != b"\x05\x00":
            raise WhoisConnectionRefused("SOCKS5 proxy rejected the handshake")
        name = host.encode("idna")
        sock.sendall(b"\x05\x01\x00\x03" + bytes([len(name)]) + name
                     + port.to_bytes(2, "big"))
        reply = sock.recv(10)
        if len(reply) < 2 or reply[1] != 0x00:
            raise WhoisConnectionRefused(f"SOCKS5 connect failed (code {reply[1:2].hex()})")
        return sock
    except WhoisConnectionRefused:
        sock.close()
        raise
    except Exception:
        sock.close()
        raise


class WhoisClient:
    """Queries WHOIS servers over TCP port 43.

    ``server_map`` routes TLDs to servers; a TLD with no entry triggers
    a single IANA referral lookup.  ``proxy`` (or the
    ``DOMAINTRIAGE_WHOIS_PROXY`` environment variable) tunnels every
    connection through an HTTP CONNECT or SOCKS5 proxy.
    """

    def __init__(
        self,
        server_map: dict[str, str] | None = None,
        iana_host: str = IANA_HOST,
        port: int = WHOIS_PORT,
        timeout: float = 10.0,
        min_interval: float = 1.0,
        proxy: str | None = None,
    ):
        self.server_map = dict(DEFAULT_SERVERS if server_map is None else server_map)
        self.iana_host = iana_host
        self.port = port
        self.timeout = timeout
        self._limiter = _RateLimiter(min_interval)
        proxy = proxy if proxy is not None else os.environ.get(PROXY_ENV_VAR) or None
        self._proxy = _parse_proxy(proxy) if proxy else None

    def _connect(self, host: str) -> socket.socket:
        try:
            if self._proxy is None:
                return _connect_direct(host, self.port, self.timeout)
            scheme, phost, pport = self._proxy
            if scheme == "http":
                return _connect_via_http(phost, pport, host, self.port, self.timeout)
            return _connect_via_socks5(phost, pport, host, self.port, self.timeout)
        except socket.timeout as exc:
            raise WhoisTimeout(f"{host}: connect timed out after {self.timeout}s") from exc
        except ConnectionRefusedError as exc:
            raise WhoisConnectionRefused(f"{host}: connection refused") from exc
        except socket.gaierror as exc:
            raise WhoisConnectionRefused(f"{host}: cannot resolve host") from exc
        except OSError as exc:
            raise WhoisConnectionRefused(f"{host}: {exc}") from exc

    def _converse(self, server: str, text: str) -> str:
        with self._limiter.lock_for(server):
            self._limiter.wait(server)
            try:
                sock = self._connect(server)
                try:
                    sock.sendall((text + "\r\n").encode("utf-8"))
                    chunks = []
                    while True:
                        data = sock.recv(4096)
                        if not data:
                            break
                        chunks.append(data)
                finally:
                    sock.close()
                    self._limiter.mark(server)
            except socket.timeout as exc:
                raise WhoisTimeout(f"{server}: no reply within {self.timeout}s") from exc
            except WhoisError:
                raise
            except OSError as exc:
                raise WhoisConnectionRefused(f"{server}: {exc}") from exc
        blob = b"".join(chunks)
        try:
            response = blob.decode("utf-8")
        except UnicodeDecodeError:
            response = blob.decode("latin-1")
        low = response.lower()
        if any(signal in low for signal in _RATE_LIMIT_SIGNALS):
            raise RateLimited(f"{server} signaled a rate limit")
        return response

    def _resolve_server(self, domain: Domain) -> str:
        server = self.server_map.get(domain.tld)
        if server:
            return server
        # one referral hop: ask IANA which server owns the TLD
        referral = self._converse(self.iana_host, domain.tld or domain.raw)
        for line in referral.splitlines():
            key, _, value = line.partition(":")
            if key.strip().lower() in ("refer", "whois") and value.strip():
                return value.strip()
        raise NoServerForTld(f"no WHOIS server known for TLD {domain.tld!r}")

    def query(self, domain: Domain) -> str:
        """Return the raw WHOIS response text for ``domain``."""
        server = self._resolve_server(domain)
        return self._converse(server, domain.raw)


# --- response parsing ---------------------------------------------------

_DATE_FORMATS = (
    "%Y-%m-%d",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%d-%b-%Y",
    "%d.%m.%Y",
    "%Y.%m.%d",
    "%Y/%m/%d",
    "%d-%m-%Y",
)

_KEY_FAMILIES = {
    "created": ("creation date", "created", "registered on"),
    "expires": ("registry expiry date", "expiration date", "paid-till"),
    "updated": ("updated date", "last-update"),
}


def _parse_whois_date(text: str) -> dt.date | None:
    text = text.strip()
    if not text:
        return None
    iso = text[:-1] + "+00:00" if text.endswith("Z") else text
    try:
        parsed = dt.datetime.fromisoformat(iso)
        if parsed.tzinfo is not None:
            parsed = parsed.astimezone(dt.timezone.utc)
        return parsed.date()
    except ValueError:
        pass
    for candidate in (text, text.split()[0], text.split()[0].title()):
        for fmt in _DATE_FORMATS:
            try:
                return dt.datetime.strptime(candidate, fmt).date()
            except ValueError:
                continue
    return None


def parse_whois(
    raw: str,
    domain: Domain,
    fetched_on: dt.date,
    registrar_lists: RegistrarLists | None = None,
) -> WhoisRecord:
    """Pull dates and registrar out of a raw WHOIS response.

    For each field the first matching key wins; a value that does not
    parse leaves the field absent.  An expiry earlier than the creation
    date is treated as unparseable and dropped.
    """
    created = expires = updated = None
    registrar_raw = None
    for line in raw.splitlines():
        key, sep, value = line.partition(":")
        if not sep:
            continue
        key = key.strip().lower()
        value = value.strip()
        if not value:
            continue
        if created is None and any(key.startswith(k) for k in _KEY_FAMILIES["created"]):
            created = _parse_whois_date(value)
        elif expires is None and any(key.startswith(k) for k in _KEY_FAMILIES["expires"]):
            expires = _parse_whois_date(value)
        elif updated is None and any(key.startswith(k) for k in _KEY_FAMILIES["updated"]):
            updated = _parse_whois_date(value)
        elif registrar_raw is None and key == "registrar":
            registrar_raw = value
    if created is not None and expires is not None and created > expires:
        expires = None
    canonical = None
    if registrar_raw is not None:
        canonical = canonicalize_registrar(registrar_raw, registrar_lists)
    return WhoisRecord(
        domain=domain,
        fetched_on=fetched_on,
        created=created,
        expires=expires,
        updated=updated,
        registrar_raw=registrar_raw,
        registrar_canonical=canonical,
    )


# --- cache ---------------------------------------------------------------

@dataclass
class _CacheEntry:
    raw: str
    fetched_on: dt.date


class WhoisCache:
    """JSON-lines store of raw WHOIS responses, one object per line:
    ``{"domain": ..., "fetched_on": "YYYY-MM-DD", "raw": ...}``.

    The newest line for a domain wins on load; each put appends a
    single line, so concurrent readers never see a torn entry.
    """

    def __init__(self, path: str):
        self.path = path
        self._entries: dict[str, _CacheEntry] = {}
        try:
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        obj = json.loads(line)
                        entry = _CacheEntry(
                            raw=obj["raw"],
                            fetched_on=dt.date.fromisoformat(obj["fetched_on"]),
                        )
                        self._entries[obj["domain"]] = entry
                    except (json.JSONDecodeError, KeyError, ValueError) as exc:
                        raise DomainTriageError(f"{path}:{lineno}: bad cache line: {exc}") from exc
        except FileNotFoundError:
            pass

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, domain_raw: str) -> bool:
        return domain_raw in self._entries

    def get(self, domain_raw: str) -> tuple[str, dt.date] | None:
        entry = self._entries.get(domain_raw)
        if entry is None:
            return None
        return entry.raw, entry.fetched_on

    def put(self, domain_raw: str, raw: str, fetched_on: dt.date) -> None:
        if fetched_on > dt.date.today():
            raise ValueError(f"fetched_on {fetched_on} is in the future")
        line = json.dumps(
            {"domain": domain_raw, "fetched_on": fetched_on.isoformat(), "raw": raw},
            ensure_ascii=True,
        )
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
        self._entries[domain_raw] = _CacheEntry(raw=raw, fetched_on=fetched_on)


def fetch_or_cache(
    domain: Domain,
    cache: WhoisCache,
    client: WhoisClient,
    fetched_on: dt.date | None = None,
    registrar_lists: RegistrarLists | None = None,
) -> WhoisRecord:
    """Return the parsed record for ``domain``, querying the network
    only on a cache miss.  Query errors propagate and leave the cache
    unchanged."""
    hit = cache.get(domain.raw)
    if hit is not None:
        raw, cached_date = hit
        return parse_whois(raw, domain, cached_date, registrar_lists)
    raw = client.query(domain)
    stamp = fetched_on or dt.date.today()
    cache.put(domain.raw, raw, stamp)
    return parse_whois(raw, domain, stamp, registrar_lists)
