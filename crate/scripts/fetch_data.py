"""Download daily index closes into data/<name>.csv (requires yfinance)."""

from pathlib import Path

import yfinance as yf

TICKERS = {"sp500": "^GSPC", "dowjones": "^DJI", "nasdaq": "^IXIC"}
START, END = "1992-01-02", "2024-12-31"


def main():
    out = Path(__file__).resolve().parent.parent / "data"
    out.mkdir(exist_ok=True)
    for name, ticker in TICKERS.items():
        frame = yf.download(ticker, start=START, end=END, auto_adjust=False, progress=False)
        close = frame["Close"].squeeze().dropna()
        with open(out / f"{name}.csv", "w") as f:
            f.write("date,close\n")
            for date, value in close.items():
                f.write(f"{date:%Y-%m-%d},{float(value)!r}\n")
        print(f"{name}: {len(close)} rows")


if __name__ == "__main__":
    main()
