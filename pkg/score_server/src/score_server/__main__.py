"""Run the scoring service: python -m score_server --model countlm:dump.jsonl:0.1"""

import argparse

import uvicorn

from .app import ServerConfig, create_app


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="score-server", description=__doc__)
    ap.add_argument(
        "--model",
        required=True,
        help="backend spec: countlm:<train-file>[:alpha] or hf:<model-path>",
    )
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--max-batch", type=int, default=1)
    ap.add_argument("--port", type=int, default=8100)
    ap.add_argument("--host", default="127.0.0.1")
    args = ap.parse_args(argv)
    config = ServerConfig(
        model=args.model, device=args.device, max_batch=args.max_batch, port=args.port
    )
    uvicorn.run(create_app(config), host=args.host, port=config.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
