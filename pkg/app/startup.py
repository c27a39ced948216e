from app.database import create_tables


def startup() -> None:
    # called before the first history read or write
    create_tables()
