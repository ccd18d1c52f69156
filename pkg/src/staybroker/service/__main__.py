"""Run the HTTP service: python -m staybroker.service [--topology ...]"""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app, topology_from_source


def main() -> None:
    parser = argparse.ArgumentParser(prog="staybroker.service")
    parser.add_argument("--topology", default="figure4",
                        help="topology/scenario file or bundled scenario name")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--static-dir", default=None)
    parser.add_argument("--data-dir", default=None)
    args = parser.parse_args()
    app = create_app(
        topology_from_source(args.topology),
        static_dir=args.static_dir,
        data_dir=args.data_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
