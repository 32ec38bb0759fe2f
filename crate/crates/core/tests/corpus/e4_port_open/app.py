import pymysql

conn = pymysql.connect(host="47.91.20.8", user="svc", password="Qv9Tm3WzLk", database="notes_app")
cur = conn.cursor()
cur.execute("SELECT title, body FROM notes WHERE author_id = %s", (7,))
